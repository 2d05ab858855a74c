#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rsrf/grower.hpp"
#include "rsrf/impurity.hpp"
#include "rsrf/oracle.hpp"

namespace rsrf {

/// Outcome of a probabilistic-SID probe: the estimated probability that one
/// random first cut admits a two-step refinement capturing at least a 1/alpha1
/// fraction of the cell's conditional variance.
struct SidEstimate {
  double delta_hat = 0.0;
  double alpha1 = 1.0;
  std::size_t n_cells = 0;
  double half_width = 0.0;  // normal-approximation 95% CI half width
  // The grid sup is a lower bound on the true sup, so delta_hat is a
  // conservative (downward-biased) estimate.
  bool conservative = true;
};

/// Samples random boxes with endpoints uniform per axis, rejecting sides
/// shorter than min_side so a 50-point grid resolves the sup.
inline Rect sample_probe_cell(std::size_t dim, RandomStream& stream,
                              double min_side = 0.05) {
  Rect rect;
  rect.sides.resize(dim);
  for (auto& side : rect.sides) {
    do {
      const double u = stream.uniform01();
      const double v = stream.uniform01();
      side = {std::min(u, v), std::max(u, v)};
    } while (side.length() < min_side);
  }
  return rect;
}

/// Estimates delta for the RSRF condition: per sampled cell, draw one first
/// cut c = (gamma, U) with gamma uniform over coordinates and U uniform on the
/// cell side, and record success iff
///   Var(m|t) <= alpha1 * grid-sup_{c1,c2} S_t(c | c1, c2).
inline SidEstimate estimate_sid_rsrf(const PopulationModel& model, double alpha1,
                                     std::size_t n_cells, int grid_res,
                                     RandomStream stream,
                                     double min_side = 0.05) {
  if (alpha1 < 1.0) throw std::invalid_argument("alpha1 >= 1");
  if (!model.has_exact_rect_moments())
    throw OracleUnavailable("estimate_sid_rsrf needs exact box moments");
  std::size_t successes = 0;
  auto cells = stream.derive(0);
  auto cuts = stream.derive(1);
  for (std::size_t c = 0; c < n_cells; ++c) {
    const Rect rect = sample_probe_cell(model.dim(), cells, min_side);
    const std::size_t axis = cuts.uniform_index(model.dim());
    const auto& side = rect.side(axis);
    const SplitPoint first{axis, side.lo + cuts.uniform01() * side.length()};
    const double variance = model.regression().rect_variance(rect);
    const auto sup = two_step_grid_sup(rect, first, model.regression(), grid_res);
    if (sup && variance <= alpha1 * sup->value) ++successes;
  }
  SidEstimate est;
  est.alpha1 = alpha1;
  est.n_cells = n_cells;
  est.delta_hat = static_cast<double>(successes) / static_cast<double>(n_cells);
  est.half_width =
      1.96 * std::sqrt(est.delta_hat * (1.0 - est.delta_hat) /
                       static_cast<double>(n_cells));
  return est;
}

/// Smallest integer W >= -2 log(2) / log(1 - delta); then 1 - (1-delta)^W is
/// at least 0.75. delta = 1 is allowed and gives W = 1.
inline int min_width_w(double delta) {
  if (!(delta > 0.0 && delta <= 1.0))
    throw std::invalid_argument("min_width_w: delta in (0, 1]");
  if (delta == 1.0) return 1;
  const double bound = -2.0 * std::log(2.0) / std::log1p(-delta);
  int w = static_cast<int>(std::ceil(bound - 1e-9));
  if (w < 1) w = 1;
  while (std::pow(1.0 - delta, w) > 0.25) ++w;  // enforce the 0.75 post-check
  return w;
}

enum class RecursionBound { kTwoOverK, kOneOverK };

struct RecursionRow {
  int k;
  double p_k;
  double bound;
  bool holds;
};

struct RecursionReport {
  RecursionBound applied = RecursionBound::kTwoOverK;
  std::vector<RecursionRow> rows;
  bool all_hold = true;
};

/// Iterates p_1 = delta, p_k = delta + (1-delta) p_{k-1}^L, the probability
/// that every branch of a depth-k tree has seen at least one good cell.
/// The comparison bound is 1 - 2/k for L in {2, 4} (the delta >= 3/4 case)
/// and 1 - 1/k for other L >= 3.
inline RecursionReport branch_recursion_bound(double delta, int L, int k_max) {
  if (delta < 0.0 || delta > 1.0) throw std::invalid_argument("delta in [0,1]");
  if (L < 2) throw std::invalid_argument("L >= 2");
  RecursionReport report;
  report.applied = (L == 2 || L == 4) ? RecursionBound::kTwoOverK
                                      : RecursionBound::kOneOverK;
  const double numer = report.applied == RecursionBound::kTwoOverK ? 2.0 : 1.0;
  double p = delta;
  for (int k = 1; k <= k_max; ++k) {
    if (k > 1) p = delta + (1.0 - delta) * std::pow(p, L);
    const double bound = 1.0 - numer / static_cast<double>(k);
    const bool holds = p >= bound;
    report.rows.push_back({k, p, bound, holds});
    report.all_hold = report.all_hold && holds;
  }
  return report;
}

struct SymmetricCellCheck {
  double lhs = 0.0;   // Var(m | t)
  double rhs = 0.0;   // 16 / (9 (1 - kappa^2)) * grid-sup S_t((1, 0.5+kappa l) | c1, c2)
  double sup = 0.0;
  bool holds = false;
};

/// Checks the symmetric-cell inequality on t = [0.5-l, 0.5+l] x [0.5-m, 0.5+m]
/// x [c1, c2] with the first cut at coordinate 1, position 0.5 + kappa*l.
inline SymmetricCellCheck symmetric_cell_inequality_check(
    double l, double m, double c1, double c2, double kappa, int grid_res,
    const RegressionFunction& regression =
        RegressionFunction::example_interaction()) {
  if (!(std::abs(kappa) < 1.0)) throw std::invalid_argument("|kappa| < 1");
  Rect rect{{Interval{0.5 - l, 0.5 + l}, Interval{0.5 - m, 0.5 + m},
             Interval{c1, c2}}};
  if (!rect.valid()) throw std::invalid_argument("degenerate symmetric cell");
  SymmetricCellCheck check;
  check.lhs = regression.rect_variance(rect);
  const SplitPoint first{0, 0.5 + kappa * l};
  const auto sup = two_step_grid_sup(rect, first, regression, grid_res);
  check.sup = sup ? sup->value : 0.0;
  check.rhs = 16.0 / (9.0 * (1.0 - kappa * kappa)) * check.sup;
  check.holds = check.lhs <= check.rhs + 1e-12;
  return check;
}

struct BranchAudit {
  std::vector<std::size_t> per_branch;  // good-cell count per root-to-leaf branch
  std::size_t min_count = 0;
  double median_count = 0.0;
};

namespace detail {

inline void audit_walk(const TreeNode& node, const RegressionFunction& m,
                       double alpha1, int grid_res, std::size_t good_so_far,
                       int depth, BranchAudit& audit) {
  // only cells the branch was split at carry realized W cuts to audit
  if (depth % 2 == 0 && !node.is_leaf() && !node.rsrf_draws.empty()) {
    const auto rect = cell_rect(node.cell);
    if (!rect) throw OracleUnavailable("audit_good_cells needs rectangular cells");
    const double variance = m.rect_variance(*rect);
    double best = -1.0;
    for (const auto& cut : node.rsrf_draws)
      if (auto sup = two_step_grid_sup(*rect, cut, m, grid_res))
        best = std::max(best, sup->value);
    if (best >= 0.0 && variance <= alpha1 * best) ++good_so_far;
  }
  if (node.is_leaf()) {
    audit.per_branch.push_back(good_so_far);
    return;
  }
  for (const auto& child : node.children)
    audit_walk(child, m, alpha1, grid_res, good_so_far, depth + 1, audit);
}

}  // namespace detail

/// Counts, for every root-to-leaf branch, the even-depth cells whose realized
/// W first cuts admit a grid two-step refinement with
/// Var(m|t) <= alpha1 * max_w sup_{c1,c2} S_t(c^w | c1, c2).
inline BranchAudit audit_good_cells(const Tree& tree, const PopulationModel& model,
                                    double alpha1, int grid_res) {
  if (!model.has_exact_rect_moments())
    throw OracleUnavailable("audit_good_cells needs exact box moments");
  BranchAudit audit;
  detail::audit_walk(tree.root, model.regression(), alpha1, grid_res, 0, 0, audit);
  audit.min_count = *std::min_element(audit.per_branch.begin(),
                                      audit.per_branch.end());
  std::vector<std::size_t> sorted = audit.per_branch;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  audit.median_count = n % 2 == 1
                           ? static_cast<double>(sorted[n / 2])
                           : 0.5 * static_cast<double>(sorted[n / 2 - 1] +
                                                       sorted[n / 2]);
  return audit;
}

struct FgCheck {
  double f_min = 0.0;
  double f_argmin = 1.0;
  double g_min = 0.0;
  double g_argmin = 1.0;
};

/// f(x) = 1/(x+1) - (1/L)(1 - (1-1/x)^L) and
/// g(x) = 2/(x+1) - (1/2)(1 - (1-2/x)^2), both nonnegative on x >= 1.
/// Evaluated with expm1/log1p so the large-x cancellation stays benign.
inline FgCheck fg_nonneg_check(int L, std::span<const double> x_grid) {
  if (L < 3) throw std::invalid_argument("fg_nonneg_check: L >= 3");
  if (x_grid.empty()) throw std::invalid_argument("empty grid");
  FgCheck check;
  bool started = false;
  for (double x : x_grid) {
    if (x < 1.0) throw std::invalid_argument("grid must lie in [1, inf)");
    const double one_minus_pow =
        x == 1.0 ? 1.0 : -std::expm1(static_cast<double>(L) * std::log1p(-1.0 / x));
    const double f = 1.0 / (x + 1.0) - one_minus_pow / static_cast<double>(L);
    double g;
    if (x < 2.0) {
      const double b = 1.0 - 2.0 / x;  // may be negative; square is fine
      g = 2.0 / (x + 1.0) - 0.5 * (1.0 - b * b);
    } else {
      // exact simplification: g(x) = 2 / (x^2 (x+1))
      g = 2.0 / (x * x * (x + 1.0));
    }
    if (!started || f < check.f_min) {
      check.f_min = f;
      check.f_argmin = x;
    }
    if (!started || g < check.g_min) {
      check.g_min = g;
      check.g_argmin = x;
    }
    started = true;
  }
  return check;
}

/// 1000-point logarithmic grid on [1, 10^6].
inline std::vector<double> default_fg_grid(std::size_t points = 1000) {
  std::vector<double> grid;
  grid.reserve(points);
  for (std::size_t i = 0; i < points; ++i)
    grid.push_back(std::pow(10.0, 6.0 * static_cast<double>(i) /
                                      static_cast<double>(points - 1)));
  grid.front() = 1.0;
  return grid;
}

}  // namespace rsrf
