#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rsrf/cell.hpp"
#include "rsrf/dataset.hpp"
#include "rsrf/oracle.hpp"

namespace rsrf {

// ---------------------------------------------------------------------------
// Empirical impurity decrease
// ---------------------------------------------------------------------------

struct ImpurityReport {
  double value = 0.0;
  std::vector<double> weights;  // #t_l / #t, zero for empty children
  std::vector<double> means;    // child sample means, 0 for empty children
};

/// S-hat(t; P) = sum_l (#t_l/#t) [mu-hat(t_l) - mu-hat(t)]^2 with the 0/0 = 0
/// convention: empty children contribute nothing.
inline ImpurityReport empirical_impurity(
    std::span<const std::size_t> parent_indices,
    std::span<const std::vector<std::size_t>> child_index_sets,
    const Dataset& dataset) {
  ImpurityReport report;
  const std::size_t n = parent_indices.size();
  if (n == 0) return report;
  double total = 0.0;
  for (std::size_t i : parent_indices) total += dataset.y(i);
  const double parent_mean = total / static_cast<double>(n);
  report.weights.reserve(child_index_sets.size());
  report.means.reserve(child_index_sets.size());
  for (const auto& child : child_index_sets) {
    if (child.empty()) {
      report.weights.push_back(0.0);
      report.means.push_back(0.0);
      continue;
    }
    double sum = 0.0;
    for (std::size_t i : child) sum += dataset.y(i);
    const double mean = sum / static_cast<double>(child.size());
    const double weight = static_cast<double>(child.size()) / static_cast<double>(n);
    report.weights.push_back(weight);
    report.means.push_back(mean);
    const double gap = mean - parent_mean;
    report.value += weight * gap * gap;
  }
  return report;
}

/// Biased (1/n) sample variance of the responses on an index set.
inline double sample_variance(std::span<const std::size_t> indices,
                              const Dataset& dataset) {
  if (indices.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i : indices) sum += dataset.y(i);
  const double mean = sum / static_cast<double>(indices.size());
  double acc = 0.0;
  for (std::size_t i : indices) {
    const double d = dataset.y(i) - mean;
    acc += d * d;
  }
  return acc / static_cast<double>(indices.size());
}

// ---------------------------------------------------------------------------
// Population impurity decrease against an oracle
// ---------------------------------------------------------------------------

struct PopulationScore {
  double value = 0.0;
  double std_error = 0.0;  // 0 when every moment came from a closed form
  bool exact = true;
};

namespace detail {

inline CellMoments cell_moments(const Cell& cell, const PopulationModel& model,
                                std::size_t mc_samples, RandomStream stream) {
  if (model.has_exact_rect_moments())
    if (auto rect = cell_rect(cell)) return model.exact_moments(*rect);
  return model.conditional_moments_mc(cell, mc_samples, stream);
}

}  // namespace detail

/// S(t; P) per the population definition: the conditional-probability-weighted
/// squared deviations of the child means from the parent mean.
inline PopulationScore population_impurity(const Cell& t,
                                           std::span<const Cell> children,
                                           const PopulationModel& model,
                                           std::size_t mc_samples = 200000,
                                           RandomStream stream = RandomStream(0)) {
  const auto mt = detail::cell_moments(t, model, mc_samples, stream.derive(0));
  if (mt.mass <= 0.0) throw ZeroMassCell("population_impurity: parent has zero mass");
  PopulationScore score;
  score.exact = mt.exact;
  double var_se2 = 0.0;
  for (std::size_t l = 0; l < children.size(); ++l) {
    const auto ml =
        detail::cell_moments(children[l], model, mc_samples, stream.derive(l + 1));
    const double p = ml.mass / mt.mass;
    const double gap = ml.mean - mt.mean;
    score.value += p * gap * gap;
    score.exact = score.exact && ml.exact;
    const double grad = 2.0 * p * gap;
    var_se2 += grad * grad * (ml.se_mean * ml.se_mean + mt.se_mean * mt.se_mean);
  }
  score.std_error = std::sqrt(var_se2);
  return score;
}

/// V(t; P) = Var(m(X)|X in t) - S(t; P).
inline PopulationScore population_V(const Cell& t, std::span<const Cell> children,
                                    const PopulationModel& model,
                                    std::size_t mc_samples = 200000,
                                    RandomStream stream = RandomStream(0)) {
  const auto mt = detail::cell_moments(t, model, mc_samples, stream.derive(0));
  auto s = population_impurity(t, children, model, mc_samples, stream);
  s.value = mt.variance - s.value;
  s.exact = s.exact && mt.exact;
  s.std_error = std::hypot(s.std_error, mt.se_variance);
  return s;
}

/// V via its decomposition into child variances: sum_l P(t_l|t) Var(m|t_l).
/// Kept as a second route so the identity can be asserted against the
/// Var - S form.
inline PopulationScore population_V_by_children(const Cell& t,
                                                std::span<const Cell> children,
                                                const PopulationModel& model,
                                                std::size_t mc_samples = 200000,
                                                RandomStream stream = RandomStream(0)) {
  const auto mt = detail::cell_moments(t, model, mc_samples, stream.derive(0));
  if (mt.mass <= 0.0) throw ZeroMassCell("population_V_by_children: zero mass");
  PopulationScore score;
  score.exact = mt.exact;
  double se2 = 0.0;
  for (std::size_t l = 0; l < children.size(); ++l) {
    const auto ml =
        detail::cell_moments(children[l], model, mc_samples, stream.derive(l + 1));
    const double p = ml.mass / mt.mass;
    score.value += p * ml.variance;
    score.exact = score.exact && ml.exact;
    se2 += p * p * ml.se_variance * ml.se_variance;
  }
  score.std_error = std::sqrt(se2);
  return score;
}

// ---------------------------------------------------------------------------
// Cut notation on rectangular cells (exact-moment oracles only)
// ---------------------------------------------------------------------------

struct SplitPoint {
  std::size_t axis;
  double pos;
};

namespace detail {

inline bool interior(const Interval& iv, double pos) {
  return pos > iv.lo && pos < iv.hi;
}

}  // namespace detail

/// S_t(c): impurity decrease of the single cut c = (axis, pos) on a box.
/// nullopt encodes the paper's "-infinity when a child is empty" sentinel.
inline std::optional<double> one_step_impurity(const Rect& t, SplitPoint c,
                                               const RegressionFunction& m) {
  if (!detail::interior(t.side(c.axis), c.pos)) return std::nullopt;
  const Rect t1 = t.cut(c.axis, c.pos, Side::kLeft);
  const Rect t2 = t.cut(c.axis, c.pos, Side::kRight);
  const double p1 = t1.side(c.axis).length() / t.side(c.axis).length();
  const double p2 = 1.0 - p1;
  const double mu = m.rect_mean(t);
  const double d1 = m.rect_mean(t1) - mu;
  const double d2 = m.rect_mean(t2) - mu;
  return p1 * d1 * d1 + p2 * d2 * d2;
}

/// Same quantity through the product identity
/// S(t; t1, t2) = P(t1|t) P(t2|t) [mu(t1) - mu(t2)]^2.
inline std::optional<double> one_step_product_form(const Rect& t, SplitPoint c,
                                                   const RegressionFunction& m) {
  if (!detail::interior(t.side(c.axis), c.pos)) return std::nullopt;
  const Rect t1 = t.cut(c.axis, c.pos, Side::kLeft);
  const Rect t2 = t.cut(c.axis, c.pos, Side::kRight);
  const double p1 = t1.side(c.axis).length() / t.side(c.axis).length();
  const double p2 = 1.0 - p1;
  const double gap = m.rect_mean(t1) - m.rect_mean(t2);
  return p1 * p2 * gap * gap;
}

/// S_t(c | c1, c2): split t at c, then the left daughter at c1 and the right
/// daughter at c2; the score of the resulting four-cell partition, evaluated
/// directly from the definition. nullopt when any of the four cells is empty.
inline std::optional<double> two_step_impurity(const Rect& t, SplitPoint c,
                                               SplitPoint c1, SplitPoint c2,
                                               const RegressionFunction& m) {
  if (!detail::interior(t.side(c.axis), c.pos)) return std::nullopt;
  const Rect left = t.cut(c.axis, c.pos, Side::kLeft);
  const Rect right = t.cut(c.axis, c.pos, Side::kRight);
  if (!detail::interior(left.side(c1.axis), c1.pos)) return std::nullopt;
  if (!detail::interior(right.side(c2.axis), c2.pos)) return std::nullopt;
  const Rect cells[4] = {left.cut(c1.axis, c1.pos, Side::kLeft),
                         left.cut(c1.axis, c1.pos, Side::kRight),
                         right.cut(c2.axis, c2.pos, Side::kLeft),
                         right.cut(c2.axis, c2.pos, Side::kRight)};
  const double vol = t.volume();
  const double mu = m.rect_mean(t);
  double s = 0.0;
  for (const auto& cell : cells) {
    const double p = cell.volume() / vol;
    const double gap = m.rect_mean(cell) - mu;
    s += p * gap * gap;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Empirical two-step decomposition residual: a four-cell score always splits
// into the first-cut score plus the mass-weighted daughter scores, on any
// finite measure
// ---------------------------------------------------------------------------

/// |S4(t) - P(t1|t) S2(t1) - P(t2|t) S2(t2) - S2(t)| for axis cuts evaluated
/// on the empirical measure of `indices`. Exact zero in exact arithmetic.
inline double empirical_two_step_residual(const Dataset& dataset,
                                          std::span<const std::size_t> indices,
                                          SplitPoint c, SplitPoint c1,
                                          SplitPoint c2) {
  std::vector<std::size_t> t1, t2;
  for (std::size_t i : indices)
    (dataset.x(i, c.axis) <= c.pos ? t1 : t2).push_back(i);
  auto halves = [&](const std::vector<std::size_t>& cell, SplitPoint sp) {
    std::vector<std::vector<std::size_t>> out(2);
    for (std::size_t i : cell)
      out[dataset.x(i, sp.axis) <= sp.pos ? 0 : 1].push_back(i);
    return out;
  };
  const auto left = halves(t1, c1);
  const auto right = halves(t2, c2);

  const std::vector<std::vector<std::size_t>> four = {left[0], left[1], right[0],
                                                      right[1]};
  const double s4 = empirical_impurity(indices, four, dataset).value;

  const std::vector<std::vector<std::size_t>> top = {t1, t2};
  const double s2 = empirical_impurity(indices, top, dataset).value;
  const double s2l = empirical_impurity(t1, left, dataset).value;
  const double s2r = empirical_impurity(t2, right, dataset).value;
  const double n = static_cast<double>(indices.size());
  const double p1 = static_cast<double>(t1.size()) / n;
  const double p2 = static_cast<double>(t2.size()) / n;
  return std::abs(s4 - p1 * s2l - p2 * s2r - s2);
}

// ---------------------------------------------------------------------------
// Grid-discretized suprema over cut positions
// ---------------------------------------------------------------------------

/// res interior positions of an interval, excluding both endpoints.
inline std::vector<double> axis_grid(const Interval& iv, int res) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(res));
  for (int i = 1; i <= res; ++i)
    out.push_back(iv.lo + iv.length() * static_cast<double>(i) /
                              static_cast<double>(res + 1));
  return out;
}

struct GridMax {
  double value = 0.0;
  SplitPoint arg{0, 0.0};
};

/// max over axes and grid positions of the one-step impurity decrease.
inline GridMax one_step_grid_max(const Rect& t, const RegressionFunction& m,
                                 int grid_res) {
  GridMax best;
  best.value = -1.0;
  for (std::size_t j = 0; j < t.dim(); ++j)
    for (double pos : axis_grid(t.side(j), grid_res))
      if (auto s = one_step_product_form(t, {j, pos}, m))
        if (*s > best.value) best = {*s, {j, pos}};
  if (best.value < 0.0) best.value = 0.0;
  return best;
}

struct TwoStepSup {
  double value = 0.0;
  SplitPoint left{0, 0.0};
  SplitPoint right{0, 0.0};
};

namespace detail {

/// Daughter cut positions: the parent-side grid filtered to the daughter plus
/// the daughter's own interior grid. Keeping the parent positions guarantees
/// the discretized two-step sup dominates every one-step score taken on the
/// same parent grid.
inline GridMax daughter_grid_max(const Rect& parent, const Rect& daughter,
                                 const RegressionFunction& m, int grid_res) {
  GridMax best;
  best.value = -1.0;
  auto consider = [&](std::size_t j, double pos) {
    if (auto s = one_step_product_form(daughter, {j, pos}, m))
      if (*s > best.value) best = {*s, {j, pos}};
  };
  for (std::size_t j = 0; j < parent.dim(); ++j) {
    for (double pos : axis_grid(parent.side(j), grid_res)) consider(j, pos);
    for (double pos : axis_grid(daughter.side(j), grid_res)) consider(j, pos);
  }
  if (best.value < 0.0) best.value = 0.0;
  return best;
}

}  // namespace detail

/// Grid-discretized sup over (c1, c2) of S_t(first | c1, c2), computed through
/// the two-step decomposition so the two daughter optimizations separate.
inline std::optional<TwoStepSup> two_step_grid_sup(const Rect& t,
                                                   SplitPoint first,
                                                   const RegressionFunction& m,
                                                   int grid_res) {
  if (grid_res < 1) throw std::invalid_argument("two_step_grid_sup: grid_res >= 1");
  const auto first_term = one_step_impurity(t, first, m);
  if (!first_term) return std::nullopt;
  const Rect left = t.cut(first.axis, first.pos, Side::kLeft);
  const Rect right = t.cut(first.axis, first.pos, Side::kRight);
  const double p1 = left.side(first.axis).length() / t.side(first.axis).length();
  const auto l = detail::daughter_grid_max(t, left, m, grid_res);
  const auto r = detail::daughter_grid_max(t, right, m, grid_res);
  TwoStepSup sup;
  sup.value = p1 * l.value + (1.0 - p1) * r.value + *first_term;
  sup.left = l.arg;
  sup.right = r.arg;
  return sup;
}

}  // namespace rsrf
