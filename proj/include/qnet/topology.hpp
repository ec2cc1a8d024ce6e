#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qnet {

using DeviceId = std::uint32_t;

/// Undirected Bell-pair edge, stored with first < second.
struct Edge {
  DeviceId a = 0;
  DeviceId b = 0;

  static Edge between(DeviceId x, DeviceId y) { return x < y ? Edge{x, y} : Edge{y, x}; }
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Devices and the Bell pairs connecting them. Ids are positive; 0 is reserved.
class Topology {
 public:
  Topology() = default;
  /// Validates ids, edges and connectivity.
  Topology(std::set<DeviceId> devices, std::set<Edge> edges);

  const std::set<DeviceId>& devices() const noexcept { return devices_; }
  const std::set<Edge>& edges() const noexcept { return edges_; }
  std::size_t size() const noexcept { return devices_.size(); }
  bool contains(DeviceId d) const { return devices_.count(d) != 0; }
  bool has_edge(DeviceId x, DeviceId y) const { return edges_.count(Edge::between(x, y)) != 0; }
  /// Ascending neighbor list.
  const std::vector<DeviceId>& neighbors(DeviceId d) const;

 private:
  std::set<DeviceId> devices_;
  std::set<Edge> edges_;
  std::map<DeviceId, std::vector<DeviceId>> adjacency_;
};

/// Rooted spanning tree; children lists are ascending.
class SpanningTree {
 public:
  SpanningTree(DeviceId root, std::map<DeviceId, DeviceId> parent,
               std::map<DeviceId, std::vector<DeviceId>> children);

  DeviceId root() const noexcept { return root_; }
  const std::map<DeviceId, DeviceId>& parent_map() const noexcept { return parent_; }
  std::optional<DeviceId> parent(DeviceId d) const;
  const std::vector<DeviceId>& children(DeviceId d) const;
  bool is_leaf(DeviceId d) const { return children(d).empty(); }
  const std::vector<DeviceId>& devices() const noexcept { return devices_; }
  std::size_t size() const noexcept { return devices_.size(); }
  bool contains(DeviceId d) const { return children_.count(d) != 0; }

  std::size_t depth(DeviceId d) const;
  /// Devices of the subtree rooted at d, ascending.
  std::vector<DeviceId> subtree(DeviceId d) const;
  /// Path root -> d inclusive.
  std::vector<DeviceId> path_from_root(DeviceId d) const;
  /// Number of tree edges between x and y.
  std::size_t distance(DeviceId x, DeviceId y) const;
  /// Child of `from` whose subtree contains `target`, if any.
  std::optional<DeviceId> next_hop(DeviceId from, DeviceId target) const;
  std::set<Edge> edges() const;

 private:
  DeviceId root_;
  std::map<DeviceId, DeviceId> parent_;
  std::map<DeviceId, std::vector<DeviceId>> children_;
  std::vector<DeviceId> devices_;
};

/// Parses the line-oriented topology format (`device <id>`, `bell <i> <j>`,
/// `# comment`). Errors carry the offending line number.
Topology parse_topology(std::string_view text);
std::string format_topology(const Topology& topology);

/// Breadth-first tree from `root`, exploring neighbors in ascending id order.
SpanningTree build_mst(const Topology& topology, DeviceId root);

/// For each child k of the root, the devices of k's subtree (k included).
std::map<DeviceId, std::set<DeviceId>> reach_sets(const SpanningTree& tree);

/// Graphviz digraph: tree edges solid (parent -> child), other Bell pairs
/// dashed and undirected.
std::string to_dot(const Topology& topology, const SpanningTree* tree = nullptr);

}  // namespace qnet
