#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rsrf/random.hpp"
#include "rsrf/split.hpp"

namespace rsrf {

struct Interval {
  double lo;
  double hi;
  double length() const { return hi - lo; }
  double midpoint() const { return 0.5 * (lo + hi); }
  bool degenerate() const { return !(lo < hi); }
};

/// A region of [0,1]^d represented as the conjunction of the split predicates
/// along its tree path. The root cell has an empty path and equals [0,1]^d.
/// For axis-only paths an exact bounding box is maintained; any oblique or
/// interaction predicate drops it, after which the cell is no longer a box.
class Cell {
 public:
  static Cell root(std::size_t dim) {
    Cell c;
    c.dim_ = dim;
    c.bbox_ = std::vector<Interval>(dim, Interval{0.0, 1.0});
    return c;
  }

  std::size_t dim() const { return dim_; }
  const std::vector<SplitPredicate>& path() const { return path_; }

  /// Exact axis-aligned box, present iff the path contains only axis splits.
  const std::optional<std::vector<Interval>>& bbox() const { return bbox_; }
  bool is_box() const { return bbox_.has_value(); }

  bool contains(std::span<const double> x) const {
    if (x.size() != dim_) throw std::invalid_argument("Cell::contains: dimension mismatch");
    for (const auto& p : path_)
      if (!p.contains(x)) return false;
    return true;
  }

  /// Child cell with one more predicate on the path.
  Cell refined(const SplitPredicate& pred) const {
    Cell child = *this;
    child.samples_.clear();
    child.path_.push_back(pred);
    if (!child.bbox_) return child;
    if (const auto* ax = std::get_if<AxisSplit>(&pred.shape)) {
      auto& iv = (*child.bbox_)[ax->axis];
      if (pred.side == Side::kLeft) {
        if (ax->threshold < iv.hi) iv.hi = ax->threshold;
      } else {
        if (ax->threshold > iv.lo) iv.lo = ax->threshold;
      }
    } else {
      child.bbox_.reset();
    }
    return child;
  }

  // Training-sample bookkeeping (train-time only).
  const std::vector<std::size_t>& samples() const { return samples_; }
  std::vector<std::size_t>& samples() { return samples_; }

 private:
  std::size_t dim_ = 0;
  std::vector<SplitPredicate> path_;
  std::optional<std::vector<Interval>> bbox_;
  std::vector<std::size_t> samples_;
};

/// Monte-Carlo Lebesgue volume of a cell. Axis-only cells short-circuit to the
/// exact box product; other shapes estimate the hit fraction over [0,1]^d,
/// which is unbiased and deterministic given the stream.
inline double cell_volume_mc(const Cell& cell, std::size_t n_samples,
                             RandomStream stream) {
  if (cell.is_box()) {
    double v = 1.0;
    for (const auto& iv : *cell.bbox()) v *= std::max(0.0, iv.length());
    return v;
  }
  if (n_samples == 0) throw std::invalid_argument("cell_volume_mc: n_samples >= 1");
  std::vector<double> x(cell.dim());
  std::size_t hits = 0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (auto& v : x) v = stream.uniform01();
    if (cell.contains(x)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n_samples);
}

}  // namespace rsrf
