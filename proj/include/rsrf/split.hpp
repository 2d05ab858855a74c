#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <variant>

namespace rsrf {

/// Which side of a split a cell keeps. The left/inside child takes <=,
/// the complement takes >; this convention is used by every split shape.
enum class Side { kLeft, kRight };

inline Side opposite(Side s) { return s == Side::kLeft ? Side::kRight : Side::kLeft; }

/// x_j <= threshold
struct AxisSplit {
  std::size_t axis;
  double threshold;
};

/// b1*x_{axis1} + b2*x_{axis2} <= offset, with (b1, b2) != (0, 0), axis1 != axis2
struct ObliqueSplit {
  std::size_t axis1;
  std::size_t axis2;
  double b1;
  double b2;
  double offset;
};

/// The seven bivariate region shapes: four corners (<=/>= on each of the two
/// coordinates), one checkerboard union, and two single-coordinate cuts.
enum class RegionKind {
  kLowLow,
  kLowHigh,
  kHighLow,
  kHighHigh,
  kCheckerboard,
  kAxis1Low,
  kAxis2Low,
};

struct InteractionSplit {
  RegionKind kind;
  std::size_t axis1;
  std::size_t axis2;
  double c1;
  double c2;
};

inline bool region_contains(const InteractionSplit& r, std::span<const double> x) {
  const double x1 = x[r.axis1];
  const double x2 = x[r.axis2];
  switch (r.kind) {
    case RegionKind::kLowLow: return x1 <= r.c1 && x2 <= r.c2;
    case RegionKind::kLowHigh: return x1 <= r.c1 && x2 >= r.c2;
    case RegionKind::kHighLow: return x1 >= r.c1 && x2 <= r.c2;
    case RegionKind::kHighHigh: return x1 >= r.c1 && x2 >= r.c2;
    case RegionKind::kCheckerboard:
      return (x1 <= r.c1 && x2 <= r.c2) || (x1 >= r.c1 && x2 >= r.c2);
    case RegionKind::kAxis1Low: return x1 <= r.c1;
    case RegionKind::kAxis2Low: return x2 <= r.c2;
  }
  throw std::logic_error("region_contains: bad kind");
}

using SplitShape = std::variant<AxisSplit, ObliqueSplit, InteractionSplit>;

/// One predicate on a cell path: a split shape plus the side the cell keeps.
/// Membership is total and deterministic; the right side is the exact
/// complement of the left, so the two children of a split tile their parent.
struct SplitPredicate {
  SplitShape shape;
  Side side = Side::kLeft;

  bool contains(std::span<const double> x) const {
    const bool inside = std::visit(
        [&x](const auto& s) -> bool {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, AxisSplit>) {
            return x[s.axis] <= s.threshold;
          } else if constexpr (std::is_same_v<T, ObliqueSplit>) {
            return s.b1 * x[s.axis1] + s.b2 * x[s.axis2] <= s.offset;
          } else {
            return region_contains(s, x);
          }
        },
        shape);
    return side == Side::kLeft ? inside : !inside;
  }
};

inline SplitPredicate axis_split(std::size_t axis, double threshold,
                                 Side side = Side::kLeft) {
  return {AxisSplit{axis, threshold}, side};
}

}  // namespace rsrf
