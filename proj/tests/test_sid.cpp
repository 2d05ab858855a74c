#include <gtest/gtest.h>

#include <cmath>

#include "rsrf/grower.hpp"
#include "rsrf/sid.hpp"

using namespace rsrf;

TEST(SidProbe, ConstantRegressionAlwaysSucceeds) {
  const PopulationModel model(3, RegressionFunction::constant(4.0), {});
  const auto est = estimate_sid_rsrf(model, 1.0, 100, 20, RandomStream(1));
  EXPECT_DOUBLE_EQ(est.delta_hat, 1.0);
  EXPECT_DOUBLE_EQ(est.half_width, 0.0);
}

TEST(SidProbe, MonotoneInAlphaOnTheSameDraw) {
  const PopulationModel model(3, RegressionFunction::example_interaction(), {});
  double prev = -1.0;
  for (double alpha1 : {1.0, 2.0, 5.0, 50.0}) {
    const auto est = estimate_sid_rsrf(model, alpha1, 200, 30, RandomStream(2));
    EXPECT_GE(est.delta_hat, prev);
    prev = est.delta_hat;
  }
}

TEST(SidProbe, TightAlphaFailsSometimes) {
  const PopulationModel model(3, RegressionFunction::example_interaction(), {});
  const auto est = estimate_sid_rsrf(model, 1.0, 300, 30, RandomStream(3));
  EXPECT_LT(est.delta_hat, 1.0);
}

TEST(SidProbe, ExampleInteractionClearsTheBar) {
  const PopulationModel model(3, RegressionFunction::example_interaction(), {});
  const auto est = estimate_sid_rsrf(model, 50.0, 500, 50,
                                     RandomStream(1).derive(stream_tag::kProbe));
  EXPECT_GE(est.delta_hat - est.half_width, 0.6);
}

TEST(SidProbe, RequiresExactMoments) {
  const auto custom = RegressionFunction::custom(
      "opaque", [](std::span<const double> x) { return x[0]; }, 1.0);
  const PopulationModel model(2, custom, {});
  EXPECT_THROW(estimate_sid_rsrf(model, 2.0, 10, 10, RandomStream(1)),
               OracleUnavailable);
}

TEST(MinWidth, SpecValuesAndDomain) {
  EXPECT_EQ(min_width_w(0.75), 1);
  EXPECT_EQ(min_width_w(0.5), 2);
  EXPECT_EQ(min_width_w(0.1), 14);
  EXPECT_EQ(min_width_w(1.0), 1);
  EXPECT_THROW(min_width_w(0.0), std::invalid_argument);
  EXPECT_THROW(min_width_w(1.5), std::invalid_argument);
}

TEST(MinWidth, MinimalOnTheDeltaGrid) {
  for (int i = 1; i <= 99; ++i) {
    const double delta = static_cast<double>(i) / 100.0;
    const int w = min_width_w(delta);
    EXPECT_GE(1.0 - std::pow(1.0 - delta, w), 0.75);
    if (w > 1) EXPECT_LT(1.0 - std::pow(1.0 - delta, w - 1), 0.75);
  }
}

TEST(BranchRecursion, SpecValues) {
  const auto report = branch_recursion_bound(0.75, 4, 10);
  EXPECT_DOUBLE_EQ(report.rows[0].p_k, 0.75);
  EXPECT_DOUBLE_EQ(report.rows[1].p_k, 0.8291015625);
  EXPECT_EQ(report.applied, RecursionBound::kTwoOverK);

  const auto sure = branch_recursion_bound(1.0, 4, 50);
  for (const auto& row : sure.rows) EXPECT_DOUBLE_EQ(row.p_k, 1.0);
}

TEST(BranchRecursion, BoundsHoldUpToFiveHundred) {
  for (const auto& [delta, L] :
       std::vector<std::pair<double, int>>{{0.75, 4}, {0.75, 2}, {2.0 / 3.0, 3}}) {
    const auto report = branch_recursion_bound(delta, L, 500);
    EXPECT_TRUE(report.all_hold) << "delta=" << delta << " L=" << L;
  }
}

TEST(BranchRecursion, NondecreasingAboveTheCriticalDelta) {
  for (int L : {2, 3, 4, 8}) {
    const double critical = 1.0 - 1.0 / static_cast<double>(L);
    for (double delta = critical; delta <= 1.0; delta += 0.05) {
      const auto report = branch_recursion_bound(delta, L, 100);
      for (std::size_t i = 1; i < report.rows.size(); ++i)
        EXPECT_GE(report.rows[i].p_k, report.rows[i - 1].p_k - 1e-15);
    }
  }
}

TEST(SymmetricCell, FullCubeExample) {
  const auto check = symmetric_cell_inequality_check(0.5, 0.5, 0.0, 1.0, 0.0, 50);
  EXPECT_NEAR(check.lhs, 13.0 / 144.0, 1e-15);
  EXPECT_NEAR(check.rhs, 1.0 / 9.0, 2e-3);  // grid sup sits just under 1/16
  EXPECT_TRUE(check.holds);
}

TEST(SymmetricCell, LargeKappaInflatesTheConstant) {
  const auto base = symmetric_cell_inequality_check(0.5, 0.5, 0.0, 1.0, 0.0, 50);
  const auto extreme =
      symmetric_cell_inequality_check(0.5, 0.5, 0.0, 1.0, 0.99, 50);
  const double constant_ratio = (extreme.rhs / extreme.sup) / (base.rhs / base.sup);
  EXPECT_GE(constant_ratio, 50.0);  // 1/(1-0.99^2) ~ 50.3
  EXPECT_TRUE(extreme.holds);
}

TEST(SymmetricCell, ConstantRegressionHoldsTrivially) {
  const auto check = symmetric_cell_inequality_check(
      0.3, 0.2, 0.1, 0.9, 0.4, 30, RegressionFunction::constant(2.0));
  EXPECT_DOUBLE_EQ(check.lhs, 0.0);
  EXPECT_TRUE(check.holds);
}

TEST(SymmetricCell, KnownViolationOfThePaperDisplay) {
  // interaction and x3 variance balanced: Var = 1/144 + 1/192 but the best
  // grid refinement only reaches about 1/256, so the 16/9 constant fails
  const auto check =
      symmetric_cell_inequality_check(0.5, 0.5, 0.375, 0.625, 0.0, 50);
  EXPECT_FALSE(check.holds);
  EXPECT_NEAR(check.lhs, 1.0 / 144.0 + 1.0 / 192.0, 1e-15);
  EXPECT_LT(check.rhs, check.lhs);
}

TEST(SymmetricCell, RejectsBadParameters) {
  EXPECT_THROW(symmetric_cell_inequality_check(0.5, 0.5, 0, 1, 1.0, 10),
               std::invalid_argument);
  EXPECT_THROW(symmetric_cell_inequality_check(0.5, 0.5, 0.7, 0.3, 0.0, 10),
               std::invalid_argument);
}

TEST(AuditGoodCells, ConstantRegressionMakesEveryCellGood) {
  const PopulationModel model(3, RegressionFunction::constant(1.0), {});
  // constant responses still split (all scores tie at zero), so the tree
  // reaches full depth and every even level is audited
  const Dataset data = model.sample_dataset(300, RandomStream(61));
  GrowConfig config{4, 1, RsrfConfig{3}, std::nullopt};
  const Tree tree = grow_tree(data, config, RandomStream(62));
  const auto audit = audit_good_cells(tree, model, 5.0, 25);
  EXPECT_EQ(audit.min_count, 2u);  // k/2
  EXPECT_DOUBLE_EQ(audit.median_count, 2.0);
}

TEST(AuditGoodCells, HugeAlphaRecoversEveryCell) {
  const PopulationModel model(3, RegressionFunction::example_interaction(),
                              {NoiseSpec::Kind::kGaussian, 0.1});
  const Dataset data = model.sample_dataset(600, RandomStream(63));
  GrowConfig config{4, 1, RsrfConfig{4}, std::nullopt};
  const Tree tree = grow_tree(data, config, RandomStream(64));
  const auto audit = audit_good_cells(tree, model, 1e12, 25);
  EXPECT_EQ(audit.min_count, 2u);
}

TEST(AuditGoodCells, InteractionModelKeepsGoodCellsInMostRuns) {
  const PopulationModel model(3, RegressionFunction::example_interaction(),
                              {NoiseSpec::Kind::kGaussian, 0.1});
  std::size_t good_runs = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Dataset data = model.sample_dataset(4000, RandomStream(700 + seed));
    GrowConfig config{6, 1, RsrfConfig{5}, std::nullopt};
    const Tree tree = grow_tree(data, config, RandomStream(seed));
    const auto audit = audit_good_cells(tree, model, 50.0, 50);
    if (audit.min_count >= 1) ++good_runs;
  }
  EXPECT_GE(static_cast<double>(good_runs) / 50.0, 0.9);
}

TEST(FgBounds, SpotValuesAndAsymptotics) {
  const auto at1 = fg_nonneg_check(3, std::vector<double>{1.0});
  EXPECT_NEAR(at1.f_min, 1.0 / 6.0, 1e-15);
  const auto at2 = fg_nonneg_check(3, std::vector<double>{2.0});
  EXPECT_NEAR(at2.g_min, 1.0 / 6.0, 1e-15);
  const auto far = fg_nonneg_check(3, std::vector<double>{1e6});
  EXPECT_LT(std::abs(far.f_min), 1e-5);
  EXPECT_GE(far.f_min, 0.0);
}

TEST(FgBounds, NonnegativeOnTheLogGrid) {
  const auto grid = default_fg_grid();
  for (int L = 3; L <= 10; ++L) {
    const auto check = fg_nonneg_check(L, grid);
    EXPECT_GE(check.f_min, -1e-12) << "L=" << L;
    EXPECT_GE(check.g_min, -1e-12);
  }
  EXPECT_THROW(fg_nonneg_check(2, grid), std::invalid_argument);
}

TEST(ProbeCells, SidesRespectTheMinimumLength) {
  RandomStream stream(71);
  for (int i = 0; i < 200; ++i) {
    const Rect rect = sample_probe_cell(3, stream);
    for (const auto& side : rect.sides) {
      EXPECT_GE(side.length(), 0.05);
      EXPECT_GE(side.lo, 0.0);
      EXPECT_LE(side.hi, 1.0);
    }
  }
}
