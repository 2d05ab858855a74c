#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rsrf/grid.hpp"
#include "rsrf/impurity.hpp"
#include "rsrf/oracle.hpp"
#include "rsrf/sid.hpp"

namespace rsrf {

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
  std::string note;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }

  void leq(const std::string& name, double measured, double bound,
           const std::string& note = "") {
    checks.push_back({name, measured, bound, measured <= bound, note});
  }
  void geq(const std::string& name, double measured, double bound,
           const std::string& note = "") {
    checks.push_back({name, measured, bound, measured >= bound, note});
  }
  void equal(const std::string& name, bool ok, double measured, double expected,
             const std::string& note = "") {
    checks.push_back({name, measured, expected, ok, note});
  }
};

// Frozen seed for the Monte-Carlo suites: statistical gates at 3 s.e. are
// deterministic only for a pinned randomization.
inline constexpr std::uint64_t kVerifySeed = 20240031;

// ---------------------------------------------------------------------------
// identities: the two-step decomposition, the product identity and the
// empirical variance decomposition on a fuzz corpus
// ---------------------------------------------------------------------------

namespace detail {

struct FuzzCase {
  Dataset data;
  std::vector<std::size_t> indices;
  SplitPoint c, c1, c2;
};

inline FuzzCase fuzz_case(RandomStream& stream) {
  const std::size_t d = 1 + stream.uniform_index(5);
  const std::size_t n = 8 + stream.uniform_index(113);
  std::vector<double> features(n * d);
  std::vector<double> responses(n);
  for (auto& v : features) v = stream.uniform01();
  for (auto& v : responses) v = 2.0 * stream.normal() + stream.uniform01();
  Dataset data(std::move(features), std::move(responses), d);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  auto rand_split = [&] {
    return SplitPoint{stream.uniform_index(d), stream.uniform01()};
  };
  return FuzzCase{std::move(data), std::move(idx), rand_split(), rand_split(),
                  rand_split()};
}

}  // namespace detail

inline SuiteReport verify_identities(std::uint64_t seed = kVerifySeed,
                                     std::size_t cases = 1000) {
  SuiteReport report;
  report.suite = "identities";
  RandomStream stream(seed);
  double worst_residual = 0.0;
  double worst_product = 0.0;
  double worst_variance = 0.0;
  for (std::size_t k = 0; k < cases; ++k) {
    auto fc = detail::fuzz_case(stream);
    worst_residual = std::max(
        worst_residual, empirical_two_step_residual(fc.data, fc.indices, fc.c,
                                                    fc.c1, fc.c2));

    // product identity on the empirical measure
    std::vector<std::vector<std::size_t>> halves(2);
    for (std::size_t i : fc.indices)
      halves[fc.data.x(i, fc.c.axis) <= fc.c.pos ? 0 : 1].push_back(i);
    const auto rep = empirical_impurity(fc.indices, halves, fc.data);
    const double n = static_cast<double>(fc.indices.size());
    const double p1 = static_cast<double>(halves[0].size()) / n;
    const double p2 = static_cast<double>(halves[1].size()) / n;
    const double gap = rep.means[0] - rep.means[1];
    worst_product = std::max(worst_product,
                             std::abs(rep.value - p1 * p2 * gap * gap));

    // variance decomposition over the four-cell partition
    std::vector<std::vector<std::size_t>> four(4);
    for (std::size_t i : fc.indices) {
      const bool left = fc.data.x(i, fc.c.axis) <= fc.c.pos;
      const auto& sp = left ? fc.c1 : fc.c2;
      const bool lo = fc.data.x(i, sp.axis) <= sp.pos;
      four[(left ? 0 : 2) + (lo ? 0 : 1)].push_back(i);
    }
    const auto rep4 = empirical_impurity(fc.indices, four, fc.data);
    double within = 0.0;
    for (std::size_t l = 0; l < 4; ++l)
      within += rep4.weights[l] * sample_variance(four[l], fc.data);
    worst_variance = std::max(
        worst_variance,
        std::abs(rep4.value + within - sample_variance(fc.indices, fc.data)));
  }
  report.leq("two_step_decomposition_residual_max", worst_residual, 1e-9);
  report.leq("one_step_product_identity_max_gap", worst_product, 1e-9);
  report.leq("variance_decomposition_max_gap", worst_variance, 1e-9);
  return report;
}

// ---------------------------------------------------------------------------
// closedforms: the example-function displays against Monte Carlo, the exact
// unit-cube spot values, and the two-step-dominates-one-step property on grids
// ---------------------------------------------------------------------------

namespace detail {

struct SplitGate {
  std::size_t axis;
  double pos;
  double p1;
  double expected;
  // left-side accumulators
  double n1 = 0.0, sum1 = 0.0, sumsq1 = 0.0;
};

inline double split_gate_z(const SplitGate& g, double total_n, double total_sum,
                           double total_sumsq) {
  const double n2 = total_n - g.n1;
  const double mu1 = g.sum1 / g.n1;
  const double mu2 = (total_sum - g.sum1) / n2;
  const double var1 = std::max(0.0, g.sumsq1 / g.n1 - mu1 * mu1);
  const double var2 =
      std::max(0.0, (total_sumsq - g.sumsq1) / n2 - mu2 * mu2);
  const double vd = var1 / g.n1 + var2 / n2;
  const double gap = mu1 - mu2;
  const double p1p2 = g.p1 * (1.0 - g.p1);
  const double estimate = p1p2 * (gap * gap - vd);
  const double se = p1p2 * std::sqrt(4.0 * gap * gap * vd + 2.0 * vd * vd);
  return (estimate - g.expected) / se;
}

}  // namespace detail

inline SuiteReport verify_closedforms(std::uint64_t seed = kVerifySeed,
                                      std::size_t n_rects = 200,
                                      std::size_t mc_samples = 1000000,
                                      int grid_res = 50) {
  SuiteReport report;
  report.suite = "closedforms";
  const auto m = RegressionFunction::example_interaction();
  RandomStream master(seed);
  auto cells = master.derive(0);
  auto cuts = master.derive(1);
  auto batches = master.derive(2);

  double worst_z = 0.0;
  std::string worst_name = "";
  for (std::size_t r = 0; r < n_rects; ++r) {
    const Rect rect = sample_probe_cell(3, cells);
    const auto forms = example_interaction::closed_forms(rect);
    const Interval a = rect.side(0), b = rect.side(1), c = rect.side(2);

    // interior cut positions keep both Monte-Carlo sides well populated
    const double pos1 = a.lo + cuts.uniform(0.05, 0.95) * a.length();
    const double pos3 = c.lo + cuts.uniform(0.05, 0.95) * c.length();
    detail::SplitGate gates[5] = {
        {0, pos1, (pos1 - a.lo) / a.length(), forms.s1(pos1)},
        {2, pos3, (pos3 - c.lo) / c.length(), forms.s3(pos3)},
        {0, a.midpoint(), 0.5, forms.s1max()},
        {1, b.midpoint(), 0.5, forms.s2max()},
        {2, c.midpoint(), 0.5, forms.s3max()},
    };

    auto batch = batches.derive(r);
    double x[3];
    double sw = 0.0, sw2 = 0.0;       // (x1-.5)(x2-.5)
    double s3m = 0.0, s3m2 = 0.0;     // x3
    double sv = 0.0, sv2 = 0.0, sv3 = 0.0, sv4 = 0.0;  // m(x)
    for (std::size_t s = 0; s < mc_samples; ++s) {
      x[0] = batch.uniform(a.lo, a.hi);
      x[1] = batch.uniform(b.lo, b.hi);
      x[2] = batch.uniform(c.lo, c.hi);
      const double w = (x[0] - 0.5) * (x[1] - 0.5);
      const double v = w + x[2];
      sw += w;
      sw2 += w * w;
      s3m += x[2];
      s3m2 += x[2] * x[2];
      sv += v;
      const double v2 = v * v;
      sv2 += v2;
      sv3 += v2 * v;
      sv4 += v2 * v2;
      for (auto& g : gates)
        if (x[g.axis] <= g.pos) {
          g.n1 += 1.0;
          g.sum1 += v;
          g.sumsq1 += v2;
        }
    }
    const double N = static_cast<double>(mc_samples);
    auto track = [&](const char* name, double z) {
      if (std::abs(z) > std::abs(worst_z)) {
        worst_z = z;
        worst_name = name;
      }
    };
    {
      const double mean = sw / N;
      const double var = std::max(0.0, sw2 / N - mean * mean);
      track("mean12", (mean - forms.mean12()) / std::sqrt(var / N));
    }
    {
      const double mean = s3m / N;
      const double var = std::max(0.0, s3m2 / N - mean * mean);
      track("mean3", (mean - forms.mean3()) / std::sqrt(var / N));
    }
    {
      const double mean = sv / N;
      const double e2 = sv2 / N;
      const double var = std::max(0.0, e2 - mean * mean);
      const double e3 = sv3 / N, e4 = sv4 / N;
      const double mu4 = e4 - 4.0 * mean * e3 + 6.0 * mean * mean * e2 -
                         3.0 * mean * mean * mean * mean;
      const double se = std::sqrt(std::max(0.0, mu4 - var * var) / N);
      track("var", (var - forms.variance()) / se);
    }
    static const char* kGateNames[5] = {"s1_at_c", "s3_at_c", "s1max", "s2max",
                                        "s3max"};
    for (int gi = 0; gi < 5; ++gi)
      track(kGateNames[gi], detail::split_gate_z(gates[gi], N, sv, sv2));
  }
  report.leq("display_mc_max_abs_z (" + worst_name + ")", std::abs(worst_z), 3.0,
             "all 8 displays x " + std::to_string(n_rects) + " boxes");

  // exact unit-cube spot values
  const auto unit = example_interaction::closed_forms(Rect::unit(3));
  report.leq("unit_cube_var_gap", std::abs(unit.variance() - 13.0 / 144.0), 1e-15);
  report.equal("unit_cube_s3max", unit.s3max() == 1.0 / 16.0, unit.s3max(),
               1.0 / 16.0);
  report.equal("unit_cube_s1max", unit.s1max() == 0.0, unit.s1max(), 0.0);
  report.equal("unit_cube_s2max", unit.s2max() == 0.0, unit.s2max(), 0.0);

  // the discretized two-step sup dominates every one-step grid score
  auto dominance_cells = master.derive(3);
  double worst_margin = 0.0;
  for (int r = 0; r < 100; ++r) {
    const Rect rect = sample_probe_cell(3, dominance_cells);
    const auto one_step = one_step_grid_max(rect, m, grid_res);
    for (int rep = 0; rep < 3; ++rep) {
      const std::size_t axis = dominance_cells.uniform_index(3);
      const auto& side = rect.side(axis);
      const SplitPoint first{axis,
                             side.lo + dominance_cells.uniform01() * side.length()};
      const auto sup = two_step_grid_sup(rect, first, m, grid_res);
      worst_margin = std::min(worst_margin, sup->value - one_step.value);
    }
  }
  report.geq("two_step_sup_minus_one_step_min", worst_margin, -1e-9);

  // s3 is maximized at the interval midpoint on a fine grid
  {
    const Rect rect{{Interval{0.1, 0.9}, Interval{0.2, 0.7}, Interval{0.25, 0.85}}};
    const auto forms = example_interaction::closed_forms(rect);
    double best = -1.0, best_pos = 0.0;
    for (double pos : axis_grid(rect.side(2), 999)) {
      const double s = forms.s3(pos);
      if (s > best) {
        best = s;
        best_pos = pos;
      }
    }
    report.leq("s3_argmax_distance_to_midpoint",
               std::abs(best_pos - rect.side(2).midpoint()), 1e-3);
    // closed-form max equals the numeric grid max of the one-step score
    double grid_best = 0.0;
    for (double pos : axis_grid(rect.side(0), 2000))
      grid_best = std::max(grid_best,
                           one_step_impurity(rect, {0, pos}, m).value_or(0.0));
    report.leq("s1max_vs_numeric_sup_gap", std::abs(grid_best - forms.s1max()),
               1e-6);
  }
  return report;
}

// ---------------------------------------------------------------------------
// recursions: branch-probability recursion bounds, the minimal width W, and
// the f/g nonnegativity bounds
// ---------------------------------------------------------------------------

inline SuiteReport verify_recursions() {
  SuiteReport report;
  report.suite = "recursions";
  {
    const auto r4 = branch_recursion_bound(0.75, 4, 500);
    const auto r2 = branch_recursion_bound(0.75, 2, 500);
    const auto r3 = branch_recursion_bound(2.0 / 3.0, 3, 500);
    auto min_margin = [](const RecursionReport& r) {
      double worst = 1.0;
      for (const auto& row : r.rows) worst = std::min(worst, row.p_k - row.bound);
      return worst;
    };
    report.geq("recursion_L4_delta075_min_margin", min_margin(r4), 0.0,
               "p_k >= 1 - 2/k");
    report.geq("recursion_L2_delta075_min_margin", min_margin(r2), 0.0,
               "p_k >= 1 - 2/k");
    report.geq("recursion_L3_delta23_min_margin", min_margin(r3), 0.0,
               "p_k >= 1 - 1/k");
    report.equal("recursion_p2_L4",
                 r4.rows[1].p_k == 0.75 + 0.25 * std::pow(0.75, 4),
                 r4.rows[1].p_k, 0.8291015625);
  }
  {
    bool post_ok = true, minimal_ok = true;
    for (int i = 1; i <= 99; ++i) {
      const double delta = static_cast<double>(i) / 100.0;
      const int w = min_width_w(delta);
      post_ok = post_ok && (1.0 - std::pow(1.0 - delta, w) >= 0.75);
      const bool prev_fails =
          w == 1 || 1.0 - std::pow(1.0 - delta, w - 1) < 0.75;
      minimal_ok = minimal_ok && prev_fails;
    }
    report.equal("min_width_post_check_99_grid", post_ok, post_ok ? 1 : 0, 1);
    report.equal("min_width_minimality_99_grid", minimal_ok, minimal_ok ? 1 : 0, 1);
    report.equal("min_width_examples",
                 min_width_w(0.75) == 1 && min_width_w(0.5) == 2 &&
                     min_width_w(0.1) == 14,
                 min_width_w(0.1), 14);
  }
  {
    const auto grid = default_fg_grid();
    double f_min = 1.0, g_min = 1.0;
    for (int L = 3; L <= 10; ++L) {
      const auto check = fg_nonneg_check(L, grid);
      f_min = std::min(f_min, check.f_min);
      g_min = std::min(g_min, check.g_min);
    }
    report.geq("f_min_over_L3_to_10", f_min, -1e-12);
    report.geq("g_min", g_min, -1e-12);
    const auto at1 = fg_nonneg_check(3, std::vector<double>{1.0});
    report.leq("f_at_1_L3_gap", std::abs((0.5 - 1.0 / 3.0) - at1.f_min), 1e-15,
               "f(1) = 1/2 - 1/L");
    const auto at2 = fg_nonneg_check(3, std::vector<double>{2.0});
    report.leq("g_at_2_gap", std::abs(1.0 / 6.0 - at2.g_min), 1e-15,
               "g(2) = 2/3 - 1/2");
  }
  return report;
}

// ---------------------------------------------------------------------------
// gridcheck: Tree-1 separation bounds and Tree-2 boundary covers at tiny scale
// ---------------------------------------------------------------------------

namespace detail {

inline Rect fuzz_rect(std::size_t dim, RandomStream& stream, double min_side) {
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

inline Cell cell_from_rect(const Rect& rect) {
  Cell cell = Cell::root(rect.dim());
  for (std::size_t j = 0; j < rect.dim(); ++j) {
    if (rect.side(j).lo > 0.0)
      cell = cell.refined(axis_split(j, rect.side(j).lo, Side::kRight));
    if (rect.side(j).hi < 1.0)
      cell = cell.refined(axis_split(j, rect.side(j).hi, Side::kLeft));
  }
  return cell;
}

}  // namespace detail

inline SuiteReport verify_gridcheck(std::uint64_t seed = kVerifySeed,
                                    std::size_t fuzz_rects = 1000,
                                    std::size_t cover_cases = 100) {
  SuiteReport report;
  report.suite = "gridcheck";
  RandomStream master(seed);

  // Tree-1 for rectangular cuts: separations <= d (g + 1), exhaustively over
  // d <= 3 and g <= 8 on fuzzed boxes plus the unit cube
  {
    auto stream = master.derive(0);
    double worst_excess = -1e9;
    for (std::size_t d = 1; d <= 3; ++d)
      for (int g = 1; g <= 8; ++g) {
        const Grid grid(g, d);
        std::vector<Rect> cells{Rect::unit(d)};
        for (std::size_t r = 0; r < fuzz_rects; ++r)
          cells.push_back(detail::fuzz_rect(d, stream, 0.02));
        const auto count = count_cart_separations(grid, cells);
        const double bound = static_cast<double>(d) * (g + 1);
        worst_excess = std::max(worst_excess,
                                static_cast<double>(count) - bound);
      }
    report.leq("cart_separations_minus_bound_max", worst_excess, 0.0,
               "bound d(g+1) over 1000 boxes at every d<=3, g<=8");
  }

  // Tree-1 for oblique cuts in d = 2: separations <= 2 C((g+1)^2, 2) + 2
  {
    double worst_excess = -1e9;
    for (int g = 1; g <= 4; ++g) {
      const Grid grid(g, 2);
      const double pts = static_cast<double>((g + 1) * (g + 1));
      const double bound = pts * (pts - 1.0) + 2.0;
      worst_excess =
          std::max(worst_excess,
                   static_cast<double>(count_oblique_separations(grid)) - bound);
    }
    report.leq("oblique_separations_minus_bound_max", worst_excess, 0.0,
               "bound 2 C((g+1)^2, 2) + 2, g<=4");
  }

  // Tree-2 boundary covers: axis cuts under one stripe, interaction regions
  // under two stripes, oblique cuts under the 9g band
  {
    auto stream = master.derive(1);
    bool covered = true;
    double worst_ratio = 0.0;  // |H| / (C g^{d-1})
    for (std::size_t i = 0; i < cover_cases; ++i) {
      const std::size_t d = 2 + stream.uniform_index(2);
      const Grid grid(8, d);
      const Rect rect = detail::fuzz_rect(d, stream, 0.2);
      const Cell t = detail::cell_from_rect(rect);
      const std::size_t axis = stream.uniform_index(d);
      const double pos = rect.side(axis).lo +
                         stream.uniform01() * rect.side(axis).length();
      const Cell t_sub = t.refined(axis_split(axis, pos));
      const auto rep = boundary_cover_check(t, t_sub, grid, d == 2 ? 24 : 8);
      covered = covered && rep.covered;
      const double cap = rep.c_constant * std::pow(8.0, static_cast<double>(d - 1));
      worst_ratio = std::max(worst_ratio, static_cast<double>(rep.h_size) / cap);
    }
    report.equal("axis_cover_all_covered", covered, covered ? 1 : 0, 1);
    report.leq("axis_cover_size_ratio_max", worst_ratio, 1.0);
  }
  {
    auto stream = master.derive(2);
    bool covered = true;
    double worst_ratio = 0.0;
    static constexpr RegionKind kForms[7] = {
        RegionKind::kLowLow,   RegionKind::kLowHigh,      RegionKind::kHighLow,
        RegionKind::kHighHigh, RegionKind::kCheckerboard, RegionKind::kAxis1Low,
        RegionKind::kAxis2Low};
    for (std::size_t i = 0; i < cover_cases; ++i) {
      const std::size_t d = 2 + stream.uniform_index(2);
      const Grid grid(8, d);
      const Rect rect = detail::fuzz_rect(d, stream, 0.2);
      const Cell t = detail::cell_from_rect(rect);
      const std::size_t j1 = stream.uniform_index(d);
      std::size_t j2 = stream.uniform_index(d - 1);
      if (j2 >= j1) ++j2;
      const InteractionSplit region{
          kForms[stream.uniform_index(7)], j1, j2,
          rect.side(j1).lo + stream.uniform01() * rect.side(j1).length(),
          rect.side(j2).lo + stream.uniform01() * rect.side(j2).length()};
      const Cell t_sub = t.refined({region, Side::kLeft});
      const auto rep = boundary_cover_check(t, t_sub, grid, d == 2 ? 24 : 8);
      covered = covered && rep.covered;
      const double cap = rep.c_constant * std::pow(8.0, static_cast<double>(d - 1));
      worst_ratio = std::max(worst_ratio, static_cast<double>(rep.h_size) / cap);
    }
    report.equal("interaction_cover_all_covered", covered, covered ? 1 : 0, 1);
    report.leq("interaction_cover_size_ratio_max", worst_ratio, 1.0);
  }
  {
    auto stream = master.derive(3);
    bool covered = true;
    double worst_size = 0.0;
    for (std::size_t i = 0; i < cover_cases; ++i) {
      const Grid grid(8, 2);
      const Rect rect = detail::fuzz_rect(2, stream, 0.2);
      const Cell t = detail::cell_from_rect(rect);
      const double theta = stream.uniform(0.0, 2.0 * std::numbers::pi);
      const double b1 = std::cos(theta), b2 = std::sin(theta);
      // offset through a random interior point so the cut meets the cell
      const double px = rect.side(0).lo + stream.uniform01() * rect.side(0).length();
      const double py = rect.side(1).lo + stream.uniform01() * rect.side(1).length();
      const ObliqueSplit plane{0, 1, b1, b2, b1 * px + b2 * py};
      const Cell t_sub = t.refined({plane, Side::kLeft});
      const auto rep = boundary_cover_check(t, t_sub, grid, 24);
      covered = covered && rep.covered;
      worst_size = std::max(worst_size, static_cast<double>(rep.h_size));
    }
    report.equal("oblique_cover_all_covered", covered, covered ? 1 : 0, 1);
    report.leq("oblique_cover_size_max", worst_size, 9.0 * 8.0, "|H| <= 9g");
  }

  // rho(t, t) is empty, and the boxes tile [0,1]^d
  {
    auto stream = master.derive(4);
    std::size_t rho_nonempty = 0;
    for (int i = 0; i < 50; ++i) {
      const std::size_t d = 1 + stream.uniform_index(3);
      const Grid grid(4, d);
      const Cell t = detail::cell_from_rect(detail::fuzz_rect(d, stream, 0.1));
      rho_nonempty += rho_boxes(t, t, grid, 8).size();
    }
    report.equal("rho_t_t_empty", rho_nonempty == 0,
                 static_cast<double>(rho_nonempty), 0.0);

    std::size_t bad = 0;
    const Grid grid(5, 3);
    std::vector<double> x(3);
    for (int i = 0; i < 10000; ++i) {
      for (auto& v : x) v = stream.uniform01();
      const auto q = grid.box_of(x);
      for (std::size_t j = 0; j < 3; ++j) {
        const auto iv = grid.interval(q[j]);
        const bool last = q[j] == grid.g() - 1;
        if (!(x[j] >= iv.lo && (last ? x[j] <= iv.hi : x[j] < iv.hi))) ++bad;
      }
    }
    report.equal("boxes_tile_unit_cube", bad == 0, static_cast<double>(bad), 0.0);
  }
  return report;
}

}  // namespace rsrf
