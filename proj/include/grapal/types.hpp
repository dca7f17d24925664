// types.hpp -- incremental settings, problem levels, query payloads, and the
// level-agnostic labeled-instance record shared by ingestion and scenarios.

#pragma once

#include "grapal/common.hpp"

#include <string>
#include <variant>

namespace grapal {

enum class Setting { task_il, class_il, domain_il, time_il };
enum class Level { node, link_classification, link_prediction, graph };

inline std::string to_string(Setting s) {
  switch (s) {
    case Setting::task_il: return "task";
    case Setting::class_il: return "class";
    case Setting::domain_il: return "domain";
    case Setting::time_il: return "time";
  }
  return "?";
}

inline std::string to_string(Level l) {
  switch (l) {
    case Level::node: return "node";
    case Level::link_classification: return "lc";
    case Level::link_prediction: return "lp";
    case Level::graph: return "graph";
  }
  return "?";
}

struct NodeRef {
  i64 node;
  bool operator==(const NodeRef&) const = default;
};
struct PairRef {
  i64 u, v;
  bool operator==(const PairRef&) const = default;
};
struct GraphRef {
  i64 graph;
  bool operator==(const GraphRef&) const = default;
};

using Payload = std::variant<NodeRef, PairRef, GraphRef>;

// One labeled instance (node, edge, or graph) before task assignment.
struct Instance {
  Payload payload;
  int label = -1;
  int domain = kNoAttr;
  int time = kNoAttr;
};

}  // namespace grapal
