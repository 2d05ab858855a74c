#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsrf/cell.hpp"
#include "rsrf/dataset.hpp"

namespace rsrf {

/// A sample index matched more than one child: the splitter emitted an
/// overlapping partition.
struct OverlapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A sample index matched no child: the splitter left a gap.
struct GapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A finite list of disjoint child cells covering a parent cell. L is 2 for
/// the one-cut splitters and 4 for RSRF.
struct Partition {
  Cell parent;
  std::vector<Cell> children;

  std::size_t size() const { return children.size(); }
};

/// Assigns every parent sample index to exactly one child, using only the
/// predicates each child appends to the parent path. Raises if any index
/// matches zero or more than one child.
inline void partition_assign(Partition& partition, const Dataset& dataset) {
  if (partition.children.empty())
    throw std::invalid_argument("partition_assign: no children");
  const std::size_t base = partition.parent.path().size();
  for (auto& child : partition.children) child.samples().clear();
  for (std::size_t idx : partition.parent.samples()) {
    const auto x = dataset.row(idx);
    std::size_t matches = 0;
    std::size_t where = 0;
    for (std::size_t c = 0; c < partition.children.size(); ++c) {
      const auto& path = partition.children[c].path();
      bool inside = true;
      for (std::size_t p = base; p < path.size(); ++p)
        if (!path[p].contains(x)) {
          inside = false;
          break;
        }
      if (inside) {
        ++matches;
        where = c;
      }
    }
    if (matches == 0)
      throw GapError("partition_assign: sample " + std::to_string(idx) +
                     " matches no child");
    if (matches > 1)
      throw OverlapError("partition_assign: sample " + std::to_string(idx) +
                         " matches " + std::to_string(matches) + " children");
    partition.children[where].samples().push_back(idx);
  }
}

}  // namespace rsrf
