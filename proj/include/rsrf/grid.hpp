#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "rsrf/cell.hpp"
#include "rsrf/oracle.hpp"

namespace rsrf {

struct NoCoveringMember : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The g^d tiling of [0,1]^d into boxes with right-open per-axis intervals
/// ([b_{g-1}, 1] closed), plus the box midpoints.
class Grid {
 public:
  Grid(int g, std::size_t dim, std::size_t box_cap = (1u << 22))
      : g_(g), dim_(dim) {
    if (g < 1) throw std::invalid_argument("Grid: g >= 1");
    if (dim < 1) throw std::invalid_argument("Grid: dim >= 1");
    double boxes = 1.0;
    for (std::size_t j = 0; j < dim; ++j) boxes *= static_cast<double>(g);
    if (boxes > static_cast<double>(box_cap))
      throw std::invalid_argument("Grid: g^d exceeds the enumeration cap");
    box_count_ = static_cast<std::size_t>(boxes);
  }

  /// g = ceil(n^(1+epsilon)) intervals per axis.
  static Grid for_sample_size(std::size_t n, double epsilon, std::size_t dim,
                              std::size_t box_cap = (1u << 22)) {
    if (n < 1) throw std::invalid_argument("Grid: n >= 1");
    if (!(epsilon > 0.0)) throw std::invalid_argument("Grid: epsilon > 0");
    const double raw = std::pow(static_cast<double>(n), 1.0 + epsilon);
    if (!(raw <= static_cast<double>(box_cap)))
      throw std::invalid_argument("Grid: g exceeds the enumeration cap");
    return Grid(static_cast<int>(std::ceil(raw - 1e-12)), dim, box_cap);
  }

  int g() const { return g_; }
  std::size_t dim() const { return dim_; }
  std::size_t box_count() const { return box_count_; }

  double point(int q) const { return static_cast<double>(q) / g_; }

  Interval interval(int q) const { return {point(q), point(q + 1)}; }

  /// Per-axis interval index of a coordinate (last interval closed at 1).
  int interval_of(double x) const {
    const int q = static_cast<int>(std::floor(x * g_));
    return std::min(std::max(q, 0), g_ - 1);
  }

  std::vector<int> box_of(std::span<const double> x) const {
    std::vector<int> q(dim_);
    for (std::size_t j = 0; j < dim_; ++j) q[j] = interval_of(x[j]);
    return q;
  }

  std::size_t flatten(std::span<const int> q) const {
    std::size_t id = 0;
    for (std::size_t j = dim_; j-- > 0;)
      id = id * static_cast<std::size_t>(g_) + static_cast<std::size_t>(q[j]);
    return id;
  }

  std::vector<int> unflatten(std::size_t id) const {
    std::vector<int> q(dim_);
    for (std::size_t j = 0; j < dim_; ++j) {
      q[j] = static_cast<int>(id % static_cast<std::size_t>(g_));
      id /= static_cast<std::size_t>(g_);
    }
    return q;
  }

  std::vector<double> midpoint(std::size_t id) const {
    const auto q = unflatten(id);
    std::vector<double> x(dim_);
    for (std::size_t j = 0; j < dim_; ++j)
      x[j] = (static_cast<double>(q[j]) + 0.5) / g_;
    return x;
  }

 private:
  int g_;
  std::size_t dim_;
  std::size_t box_count_;
};

/// t^# as the ids of the boxes with midpoint in the cell.
inline std::vector<std::size_t> sharp_operator(const Cell& cell, const Grid& grid) {
  std::vector<std::size_t> out;
  for (std::size_t id = 0; id < grid.box_count(); ++id)
    if (cell.contains(grid.midpoint(id))) out.push_back(id);
  return out;
}

namespace detail {

/// x in (t' D t'#) \ (t D t#) with D the symmetric difference; membership in
/// the sharp sets reduces to a midpoint test of the containing box.
inline bool in_rho(const Cell& t, const Cell& t_sub, const Grid& grid,
                   std::span<const double> x) {
  const auto q = grid.box_of(x);
  const auto mid = grid.midpoint(grid.flatten(q));
  const bool sub_diff = t_sub.contains(x) != t_sub.contains(mid);
  if (!sub_diff) return false;
  const bool t_diff = t.contains(x) != t.contains(mid);
  return !t_diff;
}

template <typename Fn>
void for_each_subsample(const Grid& grid, std::size_t box_id, int resolution,
                        Fn&& fn) {
  const auto q = grid.unflatten(box_id);
  const std::size_t d = grid.dim();
  std::vector<int> c(d, 0);
  std::vector<double> x(d);
  while (true) {
    for (std::size_t j = 0; j < d; ++j)
      x[j] = (static_cast<double>(q[j]) +
              (static_cast<double>(c[j]) + 0.5) / resolution) /
             grid.g();
    fn(std::span<const double>(x));
    std::size_t j = 0;
    for (; j < d; ++j) {
      if (++c[j] < resolution) break;
      c[j] = 0;
    }
    if (j == d) break;
  }
}

}  // namespace detail

/// Boxes meeting rho(t, t') = (t' D t'#) \ (t D t#), found by dense
/// sub-sampling at `resolution` lattice points per axis inside every box.
/// One-sided: a reported box certainly meets rho; a missed box can only be
/// one whose intersection with rho dodges the whole lattice.
inline std::vector<std::size_t> rho_boxes(const Cell& t, const Cell& t_sub,
                                          const Grid& grid, int resolution = 16) {
  if (resolution < 1) throw std::invalid_argument("rho_boxes: resolution >= 1");
  std::vector<std::size_t> out;
  for (std::size_t id = 0; id < grid.box_count(); ++id) {
    bool hit = false;
    detail::for_each_subsample(grid, id, resolution, [&](std::span<const double> x) {
      if (!hit && detail::in_rho(t, t_sub, grid, x)) hit = true;
    });
    if (hit) out.push_back(id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Separation counting (Tree-1 checks at desk scale)
// ---------------------------------------------------------------------------

namespace detail {

using BoxMask = std::vector<std::uint64_t>;

inline BoxMask empty_mask(std::size_t boxes) {
  return BoxMask((boxes + 63) / 64, 0);
}

inline void mask_set(BoxMask& m, std::size_t id) {
  m[id / 64] |= std::uint64_t{1} << (id % 64);
}

}  // namespace detail

/// Distinct sets {G_n^# intersect t'} over the left children t' of all axis
/// cuts of a box, counted exactly by sweeping the in-box midpoint coordinates.
inline std::size_t count_cart_separations_one(const Grid& grid, const Rect& cell) {
  // midpoints inside the cell
  std::vector<std::size_t> inside;
  for (std::size_t id = 0; id < grid.box_count(); ++id) {
    const auto mid = grid.midpoint(id);
    bool ok = true;
    for (std::size_t j = 0; j < grid.dim(); ++j)
      if (!(mid[j] >= cell.side(j).lo && mid[j] <= cell.side(j).hi)) ok = false;
    if (ok) inside.push_back(id);
  }
  std::set<detail::BoxMask> seen;
  for (std::size_t j = 0; j < grid.dim(); ++j) {
    // candidate thresholds: below, between and above the distinct midpoint
    // coordinates inside the cell side
    std::vector<double> coords;
    for (std::size_t id : inside) coords.push_back(grid.midpoint(id)[j]);
    std::sort(coords.begin(), coords.end());
    coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    std::vector<double> thresholds;
    double prev = cell.side(j).lo;
    for (double v : coords) {
      thresholds.push_back(0.5 * (prev + v));
      prev = v;
    }
    thresholds.push_back(0.5 * (prev + cell.side(j).hi));
    for (double c : thresholds) {
      auto mask = detail::empty_mask(grid.box_count());
      for (std::size_t id : inside)
        if (grid.midpoint(id)[j] <= c) detail::mask_set(mask, id);
      seen.insert(std::move(mask));
    }
  }
  return seen.size();
}

/// Max separation count over a family of boxes.
inline std::size_t count_cart_separations(const Grid& grid,
                                          std::span<const Rect> cells) {
  std::size_t worst = 0;
  for (const auto& cell : cells)
    worst = std::max(worst, count_cart_separations_one(grid, cell));
  return worst;
}

/// Distinct subsets of the box midpoints achievable by closed half-planes in
/// d = 2, enumerated exactly: every achievable subset is a prefix of the
/// midpoints sorted along some direction, and the prefix family only changes
/// at directions perpendicular to a pair difference, so sweeping those
/// directions with both tie-break orientations is exhaustive.
inline std::size_t count_oblique_separations(const Grid& grid) {
  if (grid.dim() != 2)
    throw std::invalid_argument("count_oblique_separations: d == 2 only");
  const std::size_t n = grid.box_count();
  std::vector<std::pair<double, double>> pts;
  pts.reserve(n);
  for (std::size_t id = 0; id < n; ++id) {
    const auto mid = grid.midpoint(id);
    pts.emplace_back(mid[0], mid[1]);
  }
  std::set<detail::BoxMask> seen;
  // the empty and full subsets are always achievable
  seen.insert(detail::empty_mask(n));
  {
    auto full = detail::empty_mask(n);
    for (std::size_t id = 0; id < n; ++id) detail::mask_set(full, id);
    seen.insert(std::move(full));
  }
  std::vector<std::pair<double, double>> dirs = {{1.0, 0.0}, {0.0, 1.0}};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double vx = pts[j].first - pts[i].first;
      const double vy = pts[j].second - pts[i].second;
      dirs.emplace_back(-vy, vx);  // perpendicular of the pair difference
      dirs.emplace_back(vy, -vx);
    }
  std::vector<std::size_t> order(n);
  for (const auto& [dx, dy] : dirs)
    for (int tiebreak : {+1, -1}) {
      for (std::size_t id = 0; id < n; ++id) order[id] = id;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double pa = dx * pts[a].first + dy * pts[a].second;
        const double pb = dx * pts[b].first + dy * pts[b].second;
        if (pa != pb) return pa < pb;
        const double qa = -dy * pts[a].first + dx * pts[a].second;
        const double qb = -dy * pts[b].first + dx * pts[b].second;
        return tiebreak > 0 ? qa < qb : qa > qb;
      });
      auto mask = detail::empty_mask(n);
      for (std::size_t r = 0; r + 1 < n; ++r) {
        detail::mask_set(mask, order[r]);
        seen.insert(mask);
      }
    }
  return seen.size();
}

// ---------------------------------------------------------------------------
// Boundary cover check (Tree-2 at desk scale)
// ---------------------------------------------------------------------------

struct CoverReport {
  std::size_t h_size = 0;
  bool covered = false;
  double c_constant = 0.0;  // the per-splitter constant C asserted against
};

namespace detail {

inline std::vector<std::size_t> stripe_boxes(const Grid& grid, std::size_t axis,
                                             double position) {
  const int q = grid.interval_of(position);
  std::vector<std::size_t> out;
  for (std::size_t id = 0; id < grid.box_count(); ++id)
    if (grid.unflatten(id)[axis] == q) out.push_back(id);
  return out;
}

/// Boxes whose corner projections meet the band |b.x - s| <= sqrt(2)|b|/g.
inline std::vector<std::size_t> oblique_band_boxes(const Grid& grid,
                                                   const ObliqueSplit& plane) {
  const double norm = std::hypot(plane.b1, plane.b2);
  const double w = std::sqrt(2.0) * norm / grid.g();
  std::vector<std::size_t> out;
  for (std::size_t id = 0; id < grid.box_count(); ++id) {
    const auto q = grid.unflatten(id);
    const Interval ix = grid.interval(q[plane.axis1]);
    const Interval iy = grid.interval(q[plane.axis2]);
    double lo = plane.b1 * (plane.b1 >= 0 ? ix.lo : ix.hi) +
                plane.b2 * (plane.b2 >= 0 ? iy.lo : iy.hi);
    double hi = plane.b1 * (plane.b1 >= 0 ? ix.hi : ix.lo) +
                plane.b2 * (plane.b2 >= 0 ? iy.hi : iy.lo);
    if (hi >= plane.offset - w && lo <= plane.offset + w) out.push_back(id);
  }
  return out;
}

}  // namespace detail

/// Checks that all rho boxes of a one-step split t -> t_sub are contained in
/// the splitter's catalogue member: a single stripe for axis cuts, at most two
/// stripes for interaction regions, a thickened band for oblique cuts. The
/// reported constant is the per-splitter C in |H| <= C g^{d-1}.
inline CoverReport boundary_cover_check(const Cell& t, const Cell& t_sub,
                                        const Grid& grid, int resolution = 16) {
  if (t_sub.path().size() != t.path().size() + 1)
    throw std::invalid_argument(
        "boundary_cover_check: t_sub must be one splitter step below t");
  const SplitPredicate& step = t_sub.path().back();
  std::vector<std::size_t> member;
  CoverReport report;
  if (const auto* ax = std::get_if<AxisSplit>(&step.shape)) {
    member = detail::stripe_boxes(grid, ax->axis, ax->threshold);
    report.c_constant = 1.0;
  } else if (const auto* region = std::get_if<InteractionSplit>(&step.shape)) {
    if (region->kind == RegionKind::kAxis1Low) {
      member = detail::stripe_boxes(grid, region->axis1, region->c1);
      report.c_constant = 1.0;
    } else if (region->kind == RegionKind::kAxis2Low) {
      member = detail::stripe_boxes(grid, region->axis2, region->c2);
      report.c_constant = 1.0;
    } else {
      member = detail::stripe_boxes(grid, region->axis1, region->c1);
      auto second = detail::stripe_boxes(grid, region->axis2, region->c2);
      member.insert(member.end(), second.begin(), second.end());
      std::sort(member.begin(), member.end());
      member.erase(std::unique(member.begin(), member.end()), member.end());
      report.c_constant = 2.0;
    }
  } else if (const auto* plane = std::get_if<ObliqueSplit>(&step.shape)) {
    if (grid.dim() != 2)
      throw std::invalid_argument("oblique cover check: d == 2 only");
    member = detail::oblique_band_boxes(grid, *plane);
    report.c_constant = 9.0;
  } else {
    throw NoCoveringMember("boundary_cover_check: no catalogue for this split");
  }
  std::sort(member.begin(), member.end());
  report.h_size = member.size();
  const auto rho = rho_boxes(t, t_sub, grid, resolution);
  for (std::size_t id : rho)
    if (!std::binary_search(member.begin(), member.end(), id))
      throw NoCoveringMember("boundary_cover_check: rho box " +
                             std::to_string(id) +
                             " escapes the catalogue member");
  report.covered = true;
  return report;
}

}  // namespace rsrf
