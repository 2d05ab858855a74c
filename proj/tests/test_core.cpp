#include <gtest/gtest.h>

#include "rsrf/cell.hpp"
#include "rsrf/dataset.hpp"
#include "rsrf/partition.hpp"
#include "rsrf/random.hpp"

using namespace rsrf;

namespace {

Dataset grid_2d(std::initializer_list<std::pair<double, double>> pts) {
  std::vector<double> features;
  std::vector<double> responses;
  for (const auto& [a, b] : pts) {
    features.push_back(a);
    features.push_back(b);
    responses.push_back(0.0);
  }
  return Dataset(std::move(features), std::move(responses), 2);
}

}  // namespace

TEST(Dataset, ValidatesShapeAndRange) {
  EXPECT_THROW(Dataset({0.5}, {}, 1), std::invalid_argument);
  EXPECT_THROW(Dataset({0.5, 0.5}, {1.0}, 1), std::invalid_argument);
  EXPECT_THROW(Dataset({1.5}, {1.0}, 1), std::invalid_argument);
  const Dataset ok({0.1, 0.9}, {1.0, 2.0}, 1);
  EXPECT_EQ(ok.n(), 2u);
  EXPECT_DOUBLE_EQ(ok.x(1, 0), 0.9);
}

TEST(Cell, RootContainsEverything) {
  const Cell root = Cell::root(2);
  EXPECT_TRUE(root.contains(std::vector<double>{0.0, 1.0}));
  EXPECT_TRUE(root.contains(std::vector<double>{0.37, 0.61}));
  EXPECT_TRUE(root.is_box());
}

TEST(Cell, AxisPredicate) {
  const Cell cell = Cell::root(2).refined(axis_split(0, 0.5));
  EXPECT_FALSE(cell.contains(std::vector<double>{0.7, 0.1}));
  EXPECT_TRUE(cell.contains(std::vector<double>{0.5, 0.1}));
}

TEST(Cell, CheckerboardMembership) {
  const InteractionSplit region{RegionKind::kCheckerboard, 0, 1, 0.5, 0.5};
  const Cell cell = Cell::root(2).refined({region, Side::kLeft});
  EXPECT_TRUE(cell.contains(std::vector<double>{0.6, 0.6}));
  EXPECT_TRUE(cell.contains(std::vector<double>{0.2, 0.3}));
  EXPECT_FALSE(cell.contains(std::vector<double>{0.2, 0.8}));
  EXPECT_FALSE(cell.is_box());
}

TEST(Cell, DimensionMismatchThrows) {
  EXPECT_THROW(Cell::root(3).contains(std::vector<double>{0.1, 0.2}),
               std::invalid_argument);
}

TEST(Cell, BboxMatchesMembershipOnAxisPaths) {
  RandomStream stream(11);
  for (int rep = 0; rep < 20; ++rep) {
    Cell cell = Cell::root(3);
    for (int cut = 0; cut < 4; ++cut) {
      const auto axis = stream.uniform_index(3);
      cell = cell.refined(axis_split(axis, stream.uniform01(),
                                     stream.uniform01() < 0.5 ? Side::kLeft
                                                              : Side::kRight));
    }
    ASSERT_TRUE(cell.is_box());
    const auto& bbox = *cell.bbox();
    std::vector<double> x(3);
    for (int i = 0; i < 10000; ++i) {
      for (auto& v : x) v = stream.uniform01();
      bool in_box = true;
      for (int j = 0; j < 3; ++j)
        in_box = in_box && x[j] >= bbox[j].lo && x[j] <= bbox[j].hi;
      // boundary coordinates differ only on a null set; skip exact hits
      bool on_boundary = false;
      for (int j = 0; j < 3; ++j)
        on_boundary = on_boundary || x[j] == bbox[j].lo || x[j] == bbox[j].hi;
      if (!on_boundary) EXPECT_EQ(cell.contains(x), in_box);
    }
  }
}

TEST(PartitionAssign, CartSplitAssignsBothSides) {
  const Dataset data({0.2, 0.8}, {1.0, 2.0}, 1);
  Partition partition;
  partition.parent = Cell::root(1);
  partition.parent.samples() = {0, 1};
  partition.children = {partition.parent.refined(axis_split(0, 0.5)),
                        partition.parent.refined(axis_split(0, 0.5, Side::kRight))};
  partition_assign(partition, data);
  EXPECT_EQ(partition.children[0].samples(), (std::vector<std::size_t>{0}));
  EXPECT_EQ(partition.children[1].samples(), (std::vector<std::size_t>{1}));
}

TEST(PartitionAssign, ObliqueBoundaryGoesLeft) {
  const Dataset data = grid_2d({{0.5, 0.5}});
  Partition partition;
  partition.parent = Cell::root(2);
  partition.parent.samples() = {0};
  const ObliqueSplit plane{0, 1, 1.0, 1.0, 1.0};
  partition.children = {partition.parent.refined({plane, Side::kLeft}),
                        partition.parent.refined({plane, Side::kRight})};
  partition_assign(partition, data);
  EXPECT_EQ(partition.children[0].samples().size(), 1u);
  EXPECT_TRUE(partition.children[1].samples().empty());
}

TEST(PartitionAssign, DetectsOverlapAndGap) {
  const Dataset data({0.4}, {1.0}, 1);
  Partition overlap;
  overlap.parent = Cell::root(1);
  overlap.parent.samples() = {0};
  overlap.children = {overlap.parent.refined(axis_split(0, 0.5)),
                      overlap.parent.refined(axis_split(0, 0.6))};
  EXPECT_THROW(partition_assign(overlap, data), OverlapError);

  Partition gap;
  gap.parent = Cell::root(1);
  gap.parent.samples() = {0};
  gap.children = {gap.parent.refined(axis_split(0, 0.1)),
                  gap.parent.refined(axis_split(0, 0.6, Side::kRight))};
  EXPECT_THROW(partition_assign(gap, data), GapError);
}

TEST(CellVolume, AxisCellsAreExact) {
  EXPECT_DOUBLE_EQ(cell_volume_mc(Cell::root(4), 1, RandomStream(1)), 1.0);
  const Cell half = Cell::root(2).refined(axis_split(0, 0.5));
  EXPECT_DOUBLE_EQ(cell_volume_mc(half, 1, RandomStream(1)), 0.5);
}

TEST(CellVolume, ObliqueHalfSquare) {
  const ObliqueSplit plane{0, 1, 1.0, 1.0, 1.0};
  const Cell triangle = Cell::root(2).refined({plane, Side::kLeft});
  const double volume = cell_volume_mc(triangle, 1000000, RandomStream(5));
  EXPECT_NEAR(volume, 0.5, 0.002);
}

TEST(RandomStream, DeterministicAndKeySensitive) {
  RandomStream a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    EXPECT_EQ(va, b.next_u64());
    EXPECT_NE(va, c.next_u64());
  }
  RandomStream base(7);
  auto d1 = base.derive(1);
  auto d2 = base.derive(2);
  EXPECT_NE(d1.next_u64(), d2.next_u64());
  // derivation ignores generation state
  RandomStream consumed(7);
  consumed.next_u64();
  EXPECT_EQ(RandomStream(7).derive(1).next_u64(), consumed.derive(1).next_u64());
}

TEST(RandomStream, UniformRangesAndNormalMoments) {
  RandomStream stream(3);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = stream.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.005);
  double nsum = 0.0, nsq = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double z = stream.normal();
    nsum += z;
    nsq += z * z;
  }
  EXPECT_NEAR(nsum / 100000, 0.0, 0.02);
  EXPECT_NEAR(nsq / 100000, 1.0, 0.03);
}
