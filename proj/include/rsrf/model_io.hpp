#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "rsrf/grower.hpp"

namespace rsrf {

// Versioned JSON model format: a forest is a list of trees, a tree a nested
// node record carrying split predicates and leaf means. nlohmann::json keeps
// keys sorted, so serialization is byte-deterministic.

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline nlohmann::json predicate_to_json(const SplitPredicate& pred) {
  nlohmann::json j;
  j["side"] = pred.side == Side::kLeft ? "left" : "right";
  if (const auto* ax = std::get_if<AxisSplit>(&pred.shape)) {
    j["type"] = "axis";
    j["axis"] = ax->axis;
    j["threshold"] = ax->threshold;
  } else if (const auto* ob = std::get_if<ObliqueSplit>(&pred.shape)) {
    j["type"] = "oblique";
    j["axis1"] = ob->axis1;
    j["axis2"] = ob->axis2;
    j["b1"] = ob->b1;
    j["b2"] = ob->b2;
    j["offset"] = ob->offset;
  } else {
    const auto& region = std::get<InteractionSplit>(pred.shape);
    static const char* kKindNames[] = {"low_low",      "low_high", "high_low",
                                       "high_high",    "checkerboard",
                                       "axis1_low",    "axis2_low"};
    j["type"] = "interaction";
    j["kind"] = kKindNames[static_cast<int>(region.kind)];
    j["axis1"] = region.axis1;
    j["axis2"] = region.axis2;
    j["c1"] = region.c1;
    j["c2"] = region.c2;
  }
  return j;
}

inline SplitPredicate predicate_from_json(const nlohmann::json& j) {
  SplitPredicate pred;
  pred.side = j.at("side").get<std::string>() == "left" ? Side::kLeft : Side::kRight;
  const std::string type = j.at("type").get<std::string>();
  if (type == "axis") {
    pred.shape = AxisSplit{j.at("axis").get<std::size_t>(),
                           j.at("threshold").get<double>()};
  } else if (type == "oblique") {
    pred.shape = ObliqueSplit{j.at("axis1").get<std::size_t>(),
                              j.at("axis2").get<std::size_t>(),
                              j.at("b1").get<double>(), j.at("b2").get<double>(),
                              j.at("offset").get<double>()};
  } else if (type == "interaction") {
    static const std::map<std::string, RegionKind> kKinds = {
        {"low_low", RegionKind::kLowLow},
        {"low_high", RegionKind::kLowHigh},
        {"high_low", RegionKind::kHighLow},
        {"high_high", RegionKind::kHighHigh},
        {"checkerboard", RegionKind::kCheckerboard},
        {"axis1_low", RegionKind::kAxis1Low},
        {"axis2_low", RegionKind::kAxis2Low}};
    pred.shape = InteractionSplit{kKinds.at(j.at("kind").get<std::string>()),
                                  j.at("axis1").get<std::size_t>(),
                                  j.at("axis2").get<std::size_t>(),
                                  j.at("c1").get<double>(),
                                  j.at("c2").get<double>()};
  } else {
    throw std::runtime_error("unknown predicate type: " + type);
  }
  return pred;
}

inline nlohmann::json node_to_json(const TreeNode& node) {
  nlohmann::json j;
  j["mean"] = node.mean;
  j["n"] = node.cell.samples().size();
  if (!node.is_leaf()) {
    j["split"] = predicate_to_json(node.children[0].cell.path().back());
    nlohmann::json children = nlohmann::json::array();
    for (const auto& child : node.children) children.push_back(node_to_json(child));
    j["children"] = std::move(children);
  }
  return j;
}

inline TreeNode node_from_json(const nlohmann::json& j, const Cell& cell) {
  TreeNode node;
  node.cell = cell;
  node.mean = j.at("mean").get<double>();
  if (j.contains("children")) {
    const auto pred = predicate_from_json(j.at("split"));
    const Cell left = cell.refined(pred);
    const Cell right = cell.refined({pred.shape, opposite(pred.side)});
    const auto& children = j.at("children");
    if (children.size() != 2) throw std::runtime_error("model: non-binary node");
    node.children.push_back(node_from_json(children[0], left));
    node.children.push_back(node_from_json(children[1], right));
  }
  return node;
}

}  // namespace detail

inline nlohmann::json forest_to_json(const Forest& forest, std::size_t dim) {
  nlohmann::json j;
  j["format"] = "rsrf-forest";
  j["version"] = kModelFormatVersion;
  j["dim"] = dim;
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : forest.trees) {
    nlohmann::json t;
    t["depth"] = tree.depth;
    t["root"] = detail::node_to_json(tree.root);
    trees.push_back(std::move(t));
  }
  j["trees"] = std::move(trees);
  return j;
}

inline Forest forest_from_json(const nlohmann::json& j, std::size_t* dim_out = nullptr) {
  if (j.at("format").get<std::string>() != "rsrf-forest")
    throw std::runtime_error("not an rsrf-forest model file");
  if (j.at("version").get<int>() != kModelFormatVersion)
    throw std::runtime_error("unsupported model version");
  const auto dim = j.at("dim").get<std::size_t>();
  if (dim_out) *dim_out = dim;
  Forest forest;
  for (const auto& t : j.at("trees")) {
    Tree tree;
    tree.depth = t.at("depth").get<int>();
    tree.root = detail::node_from_json(t.at("root"), Cell::root(dim));
    forest.trees.push_back(std::move(tree));
  }
  return forest;
}

inline void save_forest(const Forest& forest, std::size_t dim,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << forest_to_json(forest, dim).dump(2) << '\n';
}

inline Forest load_forest(const std::string& path, std::size_t* dim_out = nullptr) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  nlohmann::json j;
  in >> j;
  return forest_from_json(j, dim_out);
}

}  // namespace rsrf
