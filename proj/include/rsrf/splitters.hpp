#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "rsrf/dataset.hpp"
#include "rsrf/impurity.hpp"
#include "rsrf/partition.hpp"
#include "rsrf/random.hpp"

namespace rsrf {

struct NoCandidates : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CartConfig {};
struct ExtraTreesConfig {
  int nsplit = 8;
};
struct InteractionForestConfig {
  int npairs = 8;
};
struct ObliqueConfig {
  int ncandidates = 8;
};
struct RsrfConfig {
  int width = 5;
};

using SplitterConfig = std::variant<CartConfig, ExtraTreesConfig,
                                    InteractionForestConfig, ObliqueConfig,
                                    RsrfConfig>;

inline void validate(const SplitterConfig& config) {
  std::visit(
      [](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, ExtraTreesConfig>) {
          if (c.nsplit < 1) throw std::invalid_argument("nsplit >= 1");
        } else if constexpr (std::is_same_v<T, InteractionForestConfig>) {
          if (c.npairs < 1) throw std::invalid_argument("npairs >= 1");
        } else if constexpr (std::is_same_v<T, ObliqueConfig>) {
          if (c.ncandidates < 1) throw std::invalid_argument("ncandidates >= 1");
        } else if constexpr (std::is_same_v<T, RsrfConfig>) {
          if (c.width < 1) throw std::invalid_argument("W >= 1");
        }
      },
      config);
}

/// Detail recorded for a four-cell RSRF candidate: the random first cut and
/// the two CART refinements.
struct RsrfCandidateInfo {
  SplitPoint first;
  SplitPoint left;
  SplitPoint right;
};

/// One candidate partition: the child cells (sample assignment deferred), the
/// empirical impurity decrease of the candidate, and which random draw
/// produced it.
struct Candidate {
  std::vector<Cell> children;
  double score = 0.0;
  std::size_t draw_index = 0;
  std::optional<RsrfCandidateInfo> rsrf;
};

/// The randomized collection D(t) for one node: every candidate partitions the
/// parent sample (partition_assign never raises on them); the list may be
/// empty when the cell is unsplittable.
struct CandidateSet {
  Cell parent;
  std::vector<Candidate> candidates;
  std::vector<SplitPoint> rsrf_draws;  // all W first cuts as drawn (RSRF only)

  bool empty() const { return candidates.empty(); }
};

namespace detail {

/// The j-th side of a cell: the exact box side when available, otherwise the
/// range of the in-cell sample values.
inline std::optional<Interval> side_interval(const Cell& cell, std::size_t axis,
                                             const Dataset& data) {
  if (cell.is_box()) return (*cell.bbox())[axis];
  if (cell.samples().empty()) return std::nullopt;
  double lo = data.x(cell.samples().front(), axis), hi = lo;
  for (std::size_t i : cell.samples()) {
    lo = std::min(lo, data.x(i, axis));
    hi = std::max(hi, data.x(i, axis));
  }
  return Interval{lo, hi};
}

struct ChildStats {
  std::size_t n = 0;
  double sum = 0.0;
};

/// S-hat for a two-cell candidate from child counts and response sums.
inline double two_cell_score(const ChildStats& a, const ChildStats& b) {
  const double n = static_cast<double>(a.n + b.n);
  if (a.n == 0 || b.n == 0) {
    // 0/0 = 0 convention: a one-sided "partition" scores zero
    return 0.0;
  }
  const double mu = (a.sum + b.sum) / n;
  const double da = a.sum / static_cast<double>(a.n) - mu;
  const double db = b.sum / static_cast<double>(b.n) - mu;
  return (static_cast<double>(a.n) / n) * da * da +
         (static_cast<double>(b.n) / n) * db * db;
}

inline double four_cell_score(const ChildStats s[4]) {
  double n = 0.0, total = 0.0;
  for (int i = 0; i < 4; ++i) {
    n += static_cast<double>(s[i].n);
    total += s[i].sum;
  }
  const double mu = total / n;
  double score = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (s[i].n == 0) continue;
    const double d = s[i].sum / static_cast<double>(s[i].n) - mu;
    score += (static_cast<double>(s[i].n) / n) * d * d;
  }
  return score;
}

/// Splits the cell's samples by an arbitrary predicate and scores the
/// two-cell candidate in one pass.
template <typename Pred>
inline std::optional<std::pair<double, std::size_t>> score_binary(
    const Cell& cell, const Dataset& data, std::size_t min_samples, Pred&& inside) {
  ChildStats left, right;
  for (std::size_t i : cell.samples()) {
    if (inside(i)) {
      ++left.n;
      left.sum += data.y(i);
    } else {
      ++right.n;
      right.sum += data.y(i);
    }
  }
  if (left.n < min_samples || right.n < min_samples) return std::nullopt;
  return std::make_pair(two_cell_score(left, right), left.n);
}

struct CartScan {
  SplitPoint split;
  double score;
  ChildStats left, right;
};

/// All valid CART cuts of a cell: thresholds at midpoints between consecutive
/// distinct in-cell sample values, per coordinate.
inline std::vector<CartScan> cart_scan(const Cell& cell, const Dataset& data,
                                       std::size_t min_samples) {
  std::vector<CartScan> out;
  const auto& idx = cell.samples();
  const std::size_t n = idx.size();
  if (n < 2 * min_samples) return out;
  std::vector<std::pair<double, double>> xy(n);  // (x_j, y) sorted per axis
  for (std::size_t j = 0; j < data.dim(); ++j) {
    for (std::size_t r = 0; r < n; ++r) xy[r] = {data.x(idx[r], j), data.y(idx[r])};
    std::sort(xy.begin(), xy.end());
    double total = 0.0;
    for (const auto& p : xy) total += p.second;
    double prefix = 0.0;
    for (std::size_t r = 0; r + 1 < n; ++r) {
      prefix += xy[r].second;
      if (xy[r].first == xy[r + 1].first) continue;
      const std::size_t n1 = r + 1;
      if (n1 < min_samples || n - n1 < min_samples) continue;
      const ChildStats left{n1, prefix};
      const ChildStats right{n - n1, total - prefix};
      out.push_back({{j, 0.5 * (xy[r].first + xy[r + 1].first)},
                     two_cell_score(left, right),
                     left,
                     right});
    }
  }
  return out;
}

inline std::vector<Cell> binary_children(const Cell& parent,
                                         const SplitPredicate& pred) {
  return {parent.refined(pred), parent.refined({pred.shape, opposite(pred.side)})};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Candidate generators
// ---------------------------------------------------------------------------

/// Every axis cut with a threshold between consecutive in-cell sample values.
inline CandidateSet gen_cart(const Cell& cell, const Dataset& data,
                             std::size_t min_samples = 1) {
  CandidateSet set{cell, {}, {}};
  std::size_t draw = 0;
  for (const auto& scan : detail::cart_scan(cell, data, min_samples)) {
    Candidate cand;
    cand.children = detail::binary_children(
        cell, axis_split(scan.split.axis, scan.split.pos));
    cand.score = scan.score;
    cand.draw_index = draw++;
    set.candidates.push_back(std::move(cand));
  }
  return set;
}

/// nsplit uniformly random axis cuts; invalid draws are discarded, not
/// redrawn, so the number of consumed random draws stays fixed.
inline CandidateSet gen_extratrees(const Cell& cell, const Dataset& data,
                                   const ExtraTreesConfig& config,
                                   std::size_t min_samples, RandomStream stream) {
  CandidateSet set{cell, {}, {}};
  for (int w = 0; w < config.nsplit; ++w) {
    const auto axis = stream.uniform_index(data.dim());
    const double u = stream.uniform01();
    const auto side = detail::side_interval(cell, axis, data);
    if (!side || side->degenerate()) continue;
    const double pos = side->lo + u * side->length();
    auto scored = detail::score_binary(
        cell, data, min_samples, [&](std::size_t i) { return data.x(i, axis) <= pos; });
    if (!scored) continue;
    Candidate cand;
    cand.children = detail::binary_children(cell, axis_split(axis, pos));
    cand.score = scored->first;
    cand.draw_index = static_cast<std::size_t>(w);
    set.candidates.push_back(std::move(cand));
  }
  return set;
}

/// npairs draws of (j1, j2, c1, c2); each tuple emits the seven bivariate
/// region forms as two-cell partitions {t1, t \ t1}.
inline CandidateSet gen_interaction(const Cell& cell, const Dataset& data,
                                    const InteractionForestConfig& config,
                                    std::size_t min_samples, RandomStream stream) {
  CandidateSet set{cell, {}, {}};
  if (data.dim() < 2 || cell.samples().empty()) return set;
  static constexpr RegionKind kForms[7] = {
      RegionKind::kLowLow,  RegionKind::kLowHigh,      RegionKind::kHighLow,
      RegionKind::kHighHigh, RegionKind::kCheckerboard, RegionKind::kAxis1Low,
      RegionKind::kAxis2Low};
  for (int p = 0; p < config.npairs; ++p) {
    const std::size_t j1 = stream.uniform_index(data.dim());
    std::size_t j2 = stream.uniform_index(data.dim() - 1);
    if (j2 >= j1) ++j2;
    // thresholds drawn uniformly over the observed in-cell values
    const double c1 =
        data.x(cell.samples()[stream.uniform_index(cell.samples().size())], j1);
    const double c2 =
        data.x(cell.samples()[stream.uniform_index(cell.samples().size())], j2);
    for (int f = 0; f < 7; ++f) {
      const InteractionSplit region{kForms[f], j1, j2, c1, c2};
      auto scored = detail::score_binary(cell, data, min_samples, [&](std::size_t i) {
        return region_contains(region, data.row(i));
      });
      if (!scored) continue;
      Candidate cand;
      cand.children = detail::binary_children(cell, {region, Side::kLeft});
      cand.score = scored->first;
      cand.draw_index = static_cast<std::size_t>(p * 7 + f);
      set.candidates.push_back(std::move(cand));
    }
  }
  return set;
}

/// ncandidates hyperplane cuts supported on two coordinates: a uniformly
/// random distinct pair, a direction uniform on the circle, and an offset
/// uniform over the projected range of the in-cell samples.
inline CandidateSet gen_oblique(const Cell& cell, const Dataset& data,
                                const ObliqueConfig& config,
                                std::size_t min_samples, RandomStream stream) {
  CandidateSet set{cell, {}, {}};
  if (data.dim() < 2 || cell.samples().empty()) return set;
  for (int w = 0; w < config.ncandidates; ++w) {
    const std::size_t k1 = stream.uniform_index(data.dim());
    std::size_t k2 = stream.uniform_index(data.dim() - 1);
    if (k2 >= k1) ++k2;
    const double theta = stream.uniform(0.0, 2.0 * std::numbers::pi);
    const double b1 = std::cos(theta), b2 = std::sin(theta);
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (std::size_t i : cell.samples()) {
      const double proj = b1 * data.x(i, k1) + b2 * data.x(i, k2);
      if (!any) {
        lo = hi = proj;
        any = true;
      } else {
        lo = std::min(lo, proj);
        hi = std::max(hi, proj);
      }
    }
    const double offset = stream.uniform(lo, hi);
    if (!(lo < hi)) continue;
    const ObliqueSplit plane{k1, k2, b1, b2, offset};
    auto scored = detail::score_binary(cell, data, min_samples, [&](std::size_t i) {
      return b1 * data.x(i, k1) + b2 * data.x(i, k2) <= offset;
    });
    if (!scored) continue;
    Candidate cand;
    cand.children = detail::binary_children(cell, {plane, Side::kLeft});
    cand.score = scored->first;
    cand.draw_index = static_cast<std::size_t>(w);
    set.candidates.push_back(std::move(cand));
  }
  return set;
}

namespace detail {

/// argmax over scores with ties broken by one draw from the tie stream.
inline std::size_t argmax_with_ties(const std::vector<Candidate>& candidates,
                                    RandomStream& tie_stream) {
  double best = candidates.front().score;
  for (const auto& c : candidates) best = std::max(best, c.score);
  std::vector<std::size_t> ties;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (candidates[i].score == best) ties.push_back(i);
  return ties.size() == 1 ? ties.front()
                          : ties[tie_stream.uniform_index(ties.size())];
}

/// Best CART cut of a daughter by S-hat, ties random. nullopt when the
/// daughter admits no valid cut.
inline std::optional<CartScan> best_cart(const Cell& daughter, const Dataset& data,
                                         std::size_t min_samples,
                                         RandomStream tie_stream) {
  auto scans = cart_scan(daughter, data, min_samples);
  if (scans.empty()) return std::nullopt;
  double best = scans.front().score;
  for (const auto& s : scans) best = std::max(best, s.score);
  std::vector<std::size_t> ties;
  for (std::size_t i = 0; i < scans.size(); ++i)
    if (scans[i].score == best) ties.push_back(i);
  const std::size_t pick =
      ties.size() == 1 ? ties.front() : ties[tie_stream.uniform_index(ties.size())];
  return scans[pick];
}

}  // namespace detail

/// W four-cell candidates: a uniformly random first cut, each daughter refined
/// by its best CART cut. Draws whose daughters are too small or admit no CART
/// cut are discarded. All W first cuts are recorded for post-hoc audits.
inline CandidateSet gen_rsrf(const Cell& cell, const Dataset& data,
                             const RsrfConfig& config, std::size_t min_samples,
                             RandomStream stream) {
  CandidateSet set{cell, {}, {}};
  auto first_draws = stream.derive(0);
  auto tie_draws = stream.derive(1);
  for (int w = 0; w < config.width; ++w) {
    const std::size_t axis = first_draws.uniform_index(data.dim());
    const double u = first_draws.uniform01();
    const auto side = detail::side_interval(cell, axis, data);
    if (!side) continue;
    const double pos = side->lo + u * side->length();
    set.rsrf_draws.push_back({axis, pos});
    if (cell.samples().size() < 4 * min_samples) continue;

    Cell left = cell.refined(axis_split(axis, pos));
    Cell right = cell.refined(axis_split(axis, pos, Side::kRight));
    for (std::size_t i : cell.samples())
      (data.x(i, axis) <= pos ? left : right).samples().push_back(i);
    if (left.samples().size() < 2 * min_samples ||
        right.samples().size() < 2 * min_samples)
      continue;

    const auto cut_left = detail::best_cart(
        left, data, min_samples, tie_draws.derive(2 * w));
    const auto cut_right = detail::best_cart(
        right, data, min_samples, tie_draws.derive(2 * w + 1));
    if (!cut_left || !cut_right) continue;

    const detail::ChildStats stats[4] = {cut_left->left, cut_left->right,
                                         cut_right->left, cut_right->right};
    Candidate cand;
    cand.children = {
        left.refined(axis_split(cut_left->split.axis, cut_left->split.pos)),
        left.refined(axis_split(cut_left->split.axis, cut_left->split.pos, Side::kRight)),
        right.refined(axis_split(cut_right->split.axis, cut_right->split.pos)),
        right.refined(axis_split(cut_right->split.axis, cut_right->split.pos, Side::kRight))};
    for (auto& child : cand.children) child.samples().clear();
    cand.score = detail::four_cell_score(stats);
    cand.draw_index = static_cast<std::size_t>(w);
    cand.rsrf = RsrfCandidateInfo{{axis, pos}, cut_left->split, cut_right->split};
    set.candidates.push_back(std::move(cand));
  }
  return set;
}

/// Generates the candidate collection for a node under the given splitter.
inline CandidateSet generate_candidates(const SplitterConfig& config,
                                        const Cell& cell, const Dataset& data,
                                        std::size_t min_samples,
                                        RandomStream stream) {
  return std::visit(
      [&](const auto& c) -> CandidateSet {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, CartConfig>)
          return gen_cart(cell, data, min_samples);
        else if constexpr (std::is_same_v<T, ExtraTreesConfig>)
          return gen_extratrees(cell, data, c, min_samples, stream);
        else if constexpr (std::is_same_v<T, InteractionForestConfig>)
          return gen_interaction(cell, data, c, min_samples, stream);
        else if constexpr (std::is_same_v<T, ObliqueConfig>)
          return gen_oblique(cell, data, c, min_samples, stream);
        else
          return gen_rsrf(cell, data, c, min_samples, stream);
      },
      config);
}

/// Index of the best candidate by S-hat; exact ties are resolved by a draw
/// from the node's tie substream.
inline std::size_t choose_best_index(const CandidateSet& set,
                                     RandomStream tie_stream) {
  if (set.empty()) throw NoCandidates("choose_best: empty candidate set");
  return detail::argmax_with_ties(set.candidates, tie_stream);
}

/// Materializes one candidate as a Partition with the parent samples assigned.
inline Partition materialize(const CandidateSet& set, std::size_t index,
                             const Dataset& data) {
  Partition partition{set.parent, set.candidates[index].children};
  partition_assign(partition, data);
  return partition;
}

/// argmax of S-hat over the candidates, ties broken at random; returns the
/// selected partition with samples assigned.
inline Partition choose_best(const CandidateSet& set, const Dataset& data,
                             RandomStream tie_stream) {
  return materialize(set, choose_best_index(set, tie_stream), data);
}

}  // namespace rsrf
