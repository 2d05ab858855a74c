#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rsrf/dataset.hpp"
#include "rsrf/impurity.hpp"
#include "rsrf/oracle.hpp"
#include "rsrf/splitters.hpp"

namespace rsrf {

/// Switches RSRF growth to population-scored splits once a cell's probability
/// mass drops below zeta. zeta = 0 never triggers; zeta = 1 makes the whole
/// tree theoretical.
struct SemiSampleConfig {
  double zeta = 0.0;
  const PopulationModel* model = nullptr;
  int grid_res = 50;
};

struct GrowConfig {
  int depth = 2;  // k: number of levels
  std::size_t min_samples = 1;
  SplitterConfig splitter = CartConfig{};
  std::optional<SemiSampleConfig> semi_sample;
};

inline void validate(const GrowConfig& config) {
  if (config.depth < 1) throw std::invalid_argument("GrowConfig: depth >= 1");
  if (config.min_samples < 1)
    throw std::invalid_argument("GrowConfig: min_samples >= 1");
  validate(config.splitter);
  const bool is_rsrf = std::holds_alternative<RsrfConfig>(config.splitter);
  if (is_rsrf && config.depth % 2 != 0)
    throw std::invalid_argument("RSRF depth must be even");
  if (config.semi_sample) {
    if (!is_rsrf)
      throw std::invalid_argument("semi-sample growth requires the RSRF splitter");
    if (!config.semi_sample->model)
      throw OracleUnavailable("semi-sample growth needs a population model");
    if (config.semi_sample->zeta < 0.0 || config.semi_sample->zeta > 1.0)
      throw std::invalid_argument("zeta in [0,1]");
  }
}

struct TreeNode {
  Cell cell;
  double mean = 0.0;  // fitted mean of the cell's training samples (0/0 = 0)
  std::vector<TreeNode> children;  // empty or exactly two

  // provenance of the split taken at this node
  double chosen_score = 0.0;
  std::size_t chosen_draw = 0;
  std::vector<SplitPoint> rsrf_draws;  // W first cuts drawn here (RSRF nodes)
  bool theoretical = false;            // split chosen by population score

  bool is_leaf() const { return children.empty(); }
};

class Tree {
 public:
  TreeNode root;
  int depth = 0;
  RandomStream base_stream{0};  // the tree's derivation base, kept for audits

  double predict(std::span<const double> x) const {
    const TreeNode* node = &root;
    while (!node->is_leaf()) {
      const auto& pred = node->children[0].cell.path().back();
      node = pred.contains(x) ? &node->children[0] : &node->children[1];
    }
    return node->mean;
  }

  /// Leaf cells in left-to-right order.
  std::vector<const TreeNode*> leaves() const {
    std::vector<const TreeNode*> out;
    collect_leaves(root, out);
    return out;
  }

 private:
  static void collect_leaves(const TreeNode& node,
                             std::vector<const TreeNode*>& out) {
    if (node.is_leaf()) {
      out.push_back(&node);
      return;
    }
    for (const auto& child : node.children) collect_leaves(child, out);
  }
};

class Forest {
 public:
  std::vector<Tree> trees;

  double predict(std::span<const double> x) const {
    double sum = 0.0;
    for (const auto& tree : trees) sum += tree.predict(x);
    return sum / static_cast<double>(trees.size());
  }
};

namespace detail {

inline double mean_of(std::span<const std::size_t> idx, const Dataset& data) {
  if (idx.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i : idx) sum += data.y(i);
  return sum / static_cast<double>(idx.size());
}

inline double box_volume(const Cell& cell) {
  double v = 1.0;
  for (const auto& iv : *cell.bbox()) v *= std::max(0.0, iv.length());
  return v;
}

inline TreeNode make_node(Cell cell) {
  TreeNode node;
  node.cell = std::move(cell);
  return node;
}

/// Builds the two-level subtree of an RSRF step below `node` from the first
/// cut and the two daughter cuts, assigning samples along the way.
inline void attach_rsrf_children(TreeNode& node, const Dataset& data,
                                 SplitPoint first, SplitPoint left_cut,
                                 SplitPoint right_cut) {
  TreeNode left =
      make_node(node.cell.refined(axis_split(first.axis, first.pos)));
  TreeNode right = make_node(
      node.cell.refined(axis_split(first.axis, first.pos, Side::kRight)));
  for (std::size_t i : node.cell.samples())
    (data.x(i, first.axis) <= first.pos ? left : right)
        .cell.samples()
        .push_back(i);
  left.mean = mean_of(left.cell.samples(), data);
  right.mean = mean_of(right.cell.samples(), data);
  auto attach_pair = [&data](TreeNode& parent, SplitPoint cut) {
    TreeNode lo = make_node(parent.cell.refined(axis_split(cut.axis, cut.pos)));
    TreeNode hi = make_node(
        parent.cell.refined(axis_split(cut.axis, cut.pos, Side::kRight)));
    for (std::size_t i : parent.cell.samples())
      (data.x(i, cut.axis) <= cut.pos ? lo : hi).cell.samples().push_back(i);
    lo.mean = mean_of(lo.cell.samples(), data);
    hi.mean = mean_of(hi.cell.samples(), data);
    parent.children.push_back(std::move(lo));
    parent.children.push_back(std::move(hi));
  };
  attach_pair(left, left_cut);
  attach_pair(right, right_cut);
  node.children.push_back(std::move(left));
  node.children.push_back(std::move(right));
}

class Grower {
 public:
  Grower(const Dataset& data, const GrowConfig& config)
      : data_(data), config_(config) {}

  void grow(TreeNode& node, int levels_left, RandomStream node_stream) {
    node.mean = mean_of(node.cell.samples(), data_);
    if (levels_left <= 0) return;
    if (std::holds_alternative<RsrfConfig>(config_.splitter)) {
      grow_rsrf_step(node, levels_left, node_stream);
      return;
    }
    auto set = generate_candidates(config_.splitter, node.cell, data_,
                                   config_.min_samples,
                                   node_stream.derive(stream_tag::kDraw));
    if (set.empty()) return;  // unsplittable cell stays a leaf
    const std::size_t pick =
        choose_best_index(set, node_stream.derive(stream_tag::kTie));
    auto partition = materialize(set, pick, data_);
    node.chosen_score = set.candidates[pick].score;
    node.chosen_draw = set.candidates[pick].draw_index;
    for (std::size_t c = 0; c < partition.children.size(); ++c) {
      TreeNode child = make_node(std::move(partition.children[c]));
      grow(child, levels_left - 1, node_stream.derive(c + 1));
      node.children.push_back(std::move(child));
    }
  }

 private:
  void grow_rsrf_step(TreeNode& node, int levels_left, RandomStream node_stream) {
    const auto& rsrf = std::get<RsrfConfig>(config_.splitter);
    const bool theoretical = use_population_split(node.cell);
    SplitPoint first{}, left_cut{}, right_cut{};
    if (theoretical) {
      if (!select_population_split(node, rsrf, node_stream, first, left_cut,
                                   right_cut))
        return;
      node.theoretical = true;
    } else {
      auto set = gen_rsrf(node.cell, data_, rsrf, config_.min_samples,
                          node_stream.derive(stream_tag::kDraw));
      node.rsrf_draws = set.rsrf_draws;
      if (set.empty()) return;
      const std::size_t pick =
          choose_best_index(set, node_stream.derive(stream_tag::kTie));
      const auto& info = *set.candidates[pick].rsrf;
      node.chosen_score = set.candidates[pick].score;
      node.chosen_draw = set.candidates[pick].draw_index;
      first = info.first;
      left_cut = info.left;
      right_cut = info.right;
    }
    attach_rsrf_children(node, data_, first, left_cut, right_cut);
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t b = 0; b < 2; ++b) {
        TreeNode& grandchild = node.children[a].children[b];
        grow(grandchild, levels_left - 2,
             node_stream.derive(a + 1).derive(b + 1));
      }
  }

  bool use_population_split(const Cell& cell) const {
    if (!config_.semi_sample) return false;
    const double zeta = config_.semi_sample->zeta;
    if (zeta <= 0.0) return false;
    if (zeta >= 1.0) return true;
    if (!cell.is_box())
      throw OracleUnavailable("semi-sample growth needs rectangular cells");
    return box_volume(cell) < zeta;
  }

  /// Draws the W first cuts exactly as gen_rsrf would (same substream, same
  /// order) and picks (w*, c1*, c2*) by the grid-discretized population sup.
  bool select_population_split(TreeNode& node, const RsrfConfig& rsrf,
                               RandomStream node_stream, SplitPoint& first,
                               SplitPoint& left_cut, SplitPoint& right_cut) {
    const auto& semi = *config_.semi_sample;
    if (!semi.model->has_exact_rect_moments())
      throw OracleUnavailable("semi-sample growth needs exact box moments");
    auto rect = cell_rect(node.cell);
    if (!rect) throw OracleUnavailable("semi-sample growth needs rectangular cells");
    auto draws = node_stream.derive(stream_tag::kDraw).derive(0);
    bool found = false;
    double best = 0.0;
    for (int w = 0; w < rsrf.width; ++w) {
      const std::size_t axis = draws.uniform_index(data_.dim());
      const double u = draws.uniform01();
      const auto& side = (*node.cell.bbox())[axis];
      const SplitPoint cut{axis, side.lo + u * side.length()};
      node.rsrf_draws.push_back(cut);
      const auto sup = two_step_grid_sup(*rect, cut, semi.model->regression(),
                                         semi.grid_res);
      if (!sup) continue;
      if (!found || sup->value > best) {
        found = true;
        best = sup->value;
        first = cut;
        left_cut = sup->left;
        right_cut = sup->right;
        node.chosen_draw = static_cast<std::size_t>(w);
        node.chosen_score = sup->value;
      }
    }
    return found;
  }

  const Dataset& data_;
  const GrowConfig& config_;
};

}  // namespace detail

/// Grows one tree to depth k per the general greedy algorithm: every current
/// leaf receives a randomized candidate collection and keeps the best
/// partition by S-hat. A leaf whose collection is empty stops early.
inline Tree grow_tree(const Dataset& data, const GrowConfig& config,
                      RandomStream tree_stream) {
  validate(config);
  Tree tree;
  tree.depth = config.depth;
  tree.base_stream = tree_stream;
  tree.root.cell = Cell::root(data.dim());
  tree.root.cell.samples().resize(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) tree.root.cell.samples()[i] = i;
  detail::Grower grower(data, config);
  grower.grow(tree.root, config.depth, tree_stream.derive(stream_tag::kNode));
  return tree;
}

/// RSRF growth: at every even level each leaf receives the best of W two-level
/// candidates scored by the four-cell S-hat.
inline Tree grow_rsrf(const Dataset& data, const GrowConfig& config,
                      RandomStream tree_stream) {
  if (!std::holds_alternative<RsrfConfig>(config.splitter))
    throw std::invalid_argument("grow_rsrf needs an RSRF splitter config");
  return grow_tree(data, config, tree_stream);
}

/// Semi-sample RSRF growth, switching to population-scored splits on low-mass
/// cells.
inline Tree grow_semisample(const Dataset& data, const GrowConfig& config,
                            RandomStream tree_stream) {
  if (!config.semi_sample)
    throw std::invalid_argument("grow_semisample needs a semi_sample config");
  return grow_tree(data, config, tree_stream);
}

/// n_trees independently randomized trees on the same data; the forest
/// prediction is the arithmetic mean of the tree predictions.
inline Forest fit_forest(const Dataset& data, const GrowConfig& config,
                         int n_trees, std::uint64_t seed) {
  if (n_trees < 1) throw std::invalid_argument("fit_forest: n_trees >= 1");
  Forest forest;
  forest.trees.reserve(static_cast<std::size_t>(n_trees));
  RandomStream master(seed);
  auto trees = master.derive(stream_tag::kTree);
  for (int t = 0; t < n_trees; ++t)
    forest.trees.push_back(
        grow_tree(data, config, trees.derive(static_cast<std::uint64_t>(t))));
  return forest;
}

/// Mean squared error of a predictor over a test set.
template <typename Predictor>
double mse_eval(const Predictor& predictor, std::span<const double> features,
                std::span<const double> targets, std::size_t dim) {
  if (targets.empty()) throw std::invalid_argument("mse_eval: empty test set");
  if (features.size() != targets.size() * dim)
    throw std::invalid_argument("mse_eval: feature matrix is not n x d");
  double acc = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double d =
        predictor.predict(features.subspan(i * dim, dim)) - targets[i];
    acc += d * d;
  }
  return acc / static_cast<double>(targets.size());
}

}  // namespace rsrf
