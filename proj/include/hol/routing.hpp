#pragma once

// Shortest-delay routing over a road network. Each edge costs the mean
// waiting time at the intersection it enters plus its travel time.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "hol/analytics.hpp"
#include "hol/types.hpp"

namespace hol {

/// Blocking-aware routing uses each node's real communication probability;
/// the baseline pretends no vehicle communicates.
enum class RoutingMode { aware, baseline };

inline const char* to_string(RoutingMode mode) { return mode == RoutingMode::aware ? "aware" : "baseline"; }

inline constexpr double kInfiniteDelay = std::numeric_limits<double>::infinity();

struct NodeSpec {
  std::string id;
  std::optional<IntersectionSpec> intersection;  // absent: no waiting (source/sink)

  bool operator==(const NodeSpec&) const = default;
};

struct EdgeSpec {
  std::string from;
  std::string to;
  double length = 0.0;
  std::optional<double> speed;  // falls back to the network default

  bool operator==(const EdgeSpec&) const = default;
};

/// Mean waiting time at a node in slots; +inf for an unstable intersection.
inline double node_waiting_time(const NodeSpec& node, RoutingMode mode) {
  if (!node.intersection) return 0.0;
  IntersectionSpec spec = *node.intersection;
  if (mode == RoutingMode::baseline) spec.comm.p_t = 0.0;
  return waiting_time(spec).W;
}

struct RouteLeg {
  std::string from;
  std::string to;
  double wait = 0.0;    // W at the entered node
  double travel = 0.0;  // length / speed

  double weight() const { return wait + travel; }

  bool operator==(const RouteLeg&) const = default;
};

struct RouteResult {
  RoutingMode mode = RoutingMode::aware;
  bool reachable = false;
  std::vector<std::string> path;
  double total_delay = kInfiniteDelay;
  std::vector<RouteLeg> legs;

  bool operator==(const RouteResult&) const = default;
};

/// Immutable once built; waiting times for both modes are computed up front.
class TransportNetwork {
 public:
  TransportNetwork() = default;

  TransportNetwork(std::vector<NodeSpec> nodes, std::vector<EdgeSpec> edges, double default_speed = 1.0)
      : nodes_(std::move(nodes)), edges_(std::move(edges)), default_speed_(default_speed) {
    if (!(default_speed_ > 0.0) || !std::isfinite(default_speed_)) {
      throw Error(ErrorKind::invalid_argument, "network speed must be positive");
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (!index_.emplace(nodes_[i].id, i).second) {
        throw Error(ErrorKind::invalid_argument, "duplicate node id '" + nodes_[i].id + "'");
      }
      if (nodes_[i].intersection) validate(*nodes_[i].intersection);
    }
    outgoing_.resize(nodes_.size());
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const EdgeSpec& edge = edges_[e];
      if (!index_.count(edge.from) || !index_.count(edge.to)) {
        throw Error(ErrorKind::unknown_node, "edge " + edge.from + "->" + edge.to + " references a missing node");
      }
      if (!(edge.length >= 0.0) || !std::isfinite(edge.length)) {
        throw Error(ErrorKind::invalid_argument, "edge " + edge.from + "->" + edge.to + " has a negative length");
      }
      if (edge.speed && !(*edge.speed > 0.0 && std::isfinite(*edge.speed))) {
        throw Error(ErrorKind::invalid_argument, "edge " + edge.from + "->" + edge.to + " needs a positive speed");
      }
      outgoing_[index_.at(edge.from)].push_back(e);
    }
    for (const NodeSpec& node : nodes_) {
      aware_wait_.push_back(node_waiting_time(node, RoutingMode::aware));
      baseline_wait_.push_back(node_waiting_time(node, RoutingMode::baseline));
    }
  }

  const std::vector<NodeSpec>& nodes() const { return nodes_; }
  const std::vector<EdgeSpec>& edges() const { return edges_; }
  double default_speed() const { return default_speed_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  bool contains(const std::string& id) const { return index_.count(id) > 0; }

  std::size_t index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorKind::unknown_node, "no node '" + id + "'");
    return it->second;
  }

  const NodeSpec& node(const std::string& id) const { return nodes_[index_of(id)]; }

  double waiting_time_at(std::size_t node, RoutingMode mode) const {
    return mode == RoutingMode::aware ? aware_wait_[node] : baseline_wait_[node];
  }

  double travel_time(const EdgeSpec& edge) const { return edge.length / edge.speed.value_or(default_speed_); }

  RouteLeg leg(const EdgeSpec& edge, RoutingMode mode) const {
    return {edge.from, edge.to, waiting_time_at(index_of(edge.to), mode), travel_time(edge)};
  }

  const std::vector<std::size_t>& outgoing(std::size_t node) const { return outgoing_[node]; }

  bool operator==(const TransportNetwork& other) const {
    return nodes_ == other.nodes_ && edges_ == other.edges_ && default_speed_ == other.default_speed_;
  }

 private:
  std::vector<NodeSpec> nodes_;
  std::vector<EdgeSpec> edges_;
  double default_speed_ = 1.0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> outgoing_;
  std::vector<double> aware_wait_;
  std::vector<double> baseline_wait_;
};

/// T_m = W(head of edge) + length / speed.
inline double edge_weight(const TransportNetwork& net, const EdgeSpec& edge, RoutingMode mode) {
  return net.leg(edge, mode).weight();
}

/// Dijkstra over labels (delay, node-id path). Among equal-delay routes the
/// lexicographically smallest id sequence wins. Edges into unstable nodes
/// carry infinite weight and are never taken.
inline RouteResult shortest_delay_route(const TransportNetwork& net, const std::string& src, const std::string& dst,
                                        RoutingMode mode) {
  (void)net.index_of(src);
  const std::size_t target = net.index_of(dst);

  struct Label {
    double delay;
    std::vector<std::string> ids;
    std::vector<std::size_t> edges;
  };
  auto worse = [](const Label& a, const Label& b) {
    if (a.delay != b.delay) return a.delay > b.delay;
    return a.ids > b.ids;
  };
  std::priority_queue<Label, std::vector<Label>, decltype(worse)> open(worse);
  std::vector<bool> settled(net.node_count(), false);
  open.push({0.0, {src}, {}});

  RouteResult result;
  result.mode = mode;
  while (!open.empty()) {
    Label label = open.top();
    open.pop();
    const std::size_t at = net.index_of(label.ids.back());
    if (settled[at]) continue;
    settled[at] = true;
    if (at == target) {
      result.reachable = true;
      result.path = std::move(label.ids);
      result.total_delay = label.delay;
      for (std::size_t e : label.edges) result.legs.push_back(net.leg(net.edges()[e], mode));
      return result;
    }
    for (std::size_t e : net.outgoing(at)) {
      const EdgeSpec& edge = net.edges()[e];
      const std::size_t next = net.index_of(edge.to);
      if (settled[next]) continue;
      const double weight = edge_weight(net, edge, mode);
      if (!std::isfinite(weight)) continue;
      Label extended{label.delay + weight, label.ids, label.edges};
      extended.ids.push_back(edge.to);
      extended.edges.push_back(e);
      open.push(std::move(extended));
    }
  }
  return result;
}

/// Re-costs a path with the given mode's weights; legs follow the cheapest
/// parallel edge between consecutive nodes. Infinite if any hop is missing.
inline double path_delay(const TransportNetwork& net, const std::vector<std::string>& path, RoutingMode mode) {
  if (path.empty()) return kInfiniteDelay;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    double best = kInfiniteDelay;
    for (std::size_t e : net.outgoing(net.index_of(path[i]))) {
      const EdgeSpec& edge = net.edges()[e];
      if (edge.to == path[i + 1]) best = std::min(best, edge_weight(net, edge, mode));
    }
    total += best;
  }
  return total;
}

struct ModeComparison {
  RouteResult aware;
  RouteResult baseline;
  double baseline_true_delay = kInfiniteDelay;  // baseline path under aware weights
  std::optional<double> gap;                    // baseline_true_delay - aware.total_delay

  bool operator==(const ModeComparison&) const = default;
};

/// Routes with both modes and charges the baseline's path with the real
/// (communication-aware) waiting times, so the gap is the excess delay the
/// baseline actually incurs.
inline ModeComparison compare_modes(const TransportNetwork& net, const std::string& src, const std::string& dst) {
  ModeComparison cmp;
  cmp.aware = shortest_delay_route(net, src, dst, RoutingMode::aware);
  cmp.baseline = shortest_delay_route(net, src, dst, RoutingMode::baseline);
  if (cmp.baseline.reachable) cmp.baseline_true_delay = path_delay(net, cmp.baseline.path, RoutingMode::aware);
  if (cmp.aware.reachable && cmp.baseline.reachable) cmp.gap = cmp.baseline_true_delay - cmp.aware.total_delay;
  return cmp;
}

}  // namespace hol
