#include "qnet/topology.hpp"

#include <algorithm>
#include <charconv>
#include <deque>

#include <fmt/format.h>

#include "qnet/error.hpp"

namespace qnet {

namespace {

constexpr DeviceId kMaxDeviceId = (1u << 16) - 1;

std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

DeviceId parse_id(std::string_view word, std::size_t line) {
  unsigned long value = 0;
  auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), value);
  if (ec != std::errc() || ptr != word.data() + word.size()) {
    throw Error(ErrorCode::Syntax, fmt::format("'{}' is not a device id", word), line);
  }
  if (value < 1 || value > kMaxDeviceId) {
    throw Error(ErrorCode::Syntax, fmt::format("device id {} outside [1, 65535]", value), line);
  }
  return static_cast<DeviceId>(value);
}

}  // namespace

Topology::Topology(std::set<DeviceId> devices, std::set<Edge> edges)
    : devices_(std::move(devices)), edges_(std::move(edges)) {
  if (devices_.empty()) {
    throw Error(ErrorCode::Syntax, "topology declares no devices");
  }
  for (auto d : devices_) {
    if (d == 0 || d > kMaxDeviceId) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("device id {} outside [1, 65535]", d));
    }
    adjacency_[d];
  }
  for (const auto& e : edges_) {
    if (e.a == e.b) {
      throw Error(ErrorCode::SelfLoop, fmt::format("bell pair {}-{} is a self-loop", e.a, e.b));
    }
    if (!contains(e.a) || !contains(e.b)) {
      throw Error(ErrorCode::UnknownDevice, fmt::format("bell pair {}-{} uses an unknown device", e.a, e.b));
    }
    adjacency_[e.a].push_back(e.b);
    adjacency_[e.b].push_back(e.a);
  }
  for (auto& [d, list] : adjacency_) std::sort(list.begin(), list.end());

  std::set<DeviceId> seen{*devices_.begin()};
  std::deque<DeviceId> queue{*devices_.begin()};
  while (!queue.empty()) {
    const DeviceId d = queue.front();
    queue.pop_front();
    for (auto n : adjacency_[d]) {
      if (seen.insert(n).second) queue.push_back(n);
    }
  }
  if (seen.size() != devices_.size()) {
    std::vector<DeviceId> missing;
    std::set_difference(devices_.begin(), devices_.end(), seen.begin(), seen.end(),
                        std::back_inserter(missing));
    throw Error(ErrorCode::Disconnected,
                fmt::format("devices {} are not connected to device {}", fmt::join(missing, ","),
                            *devices_.begin()));
  }
}

const std::vector<DeviceId>& Topology::neighbors(DeviceId d) const {
  auto it = adjacency_.find(d);
  if (it == adjacency_.end()) {
    throw Error(ErrorCode::UnknownDevice, fmt::format("no device {}", d));
  }
  return it->second;
}

Topology parse_topology(std::string_view text) {
  std::set<DeviceId> devices;
  std::set<Edge> edges;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto words = split_words(line);
    if (words.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (words[0] == "device") {
      if (words.size() != 2) throw Error(ErrorCode::Syntax, "expected 'device <id>'", line_no);
      const DeviceId d = parse_id(words[1], line_no);
      if (!devices.insert(d).second) {
        throw Error(ErrorCode::DuplicateDevice, fmt::format("device {} declared twice", d), line_no);
      }
    } else if (words[0] == "bell") {
      if (words.size() != 3) throw Error(ErrorCode::Syntax, "expected 'bell <i> <j>'", line_no);
      const DeviceId x = parse_id(words[1], line_no);
      const DeviceId y = parse_id(words[2], line_no);
      for (auto d : {x, y}) {
        if (!devices.count(d)) {
          throw Error(ErrorCode::UnknownDevice, fmt::format("device {} is not declared", d), line_no);
        }
      }
      if (x == y) throw Error(ErrorCode::SelfLoop, fmt::format("bell {} {} is a self-loop", x, y), line_no);
      if (!edges.insert(Edge::between(x, y)).second) {
        throw Error(ErrorCode::DuplicateEdge, fmt::format("bell pair {}-{} listed twice", x, y), line_no);
      }
    } else {
      throw Error(ErrorCode::Syntax, fmt::format("unknown directive '{}'", words[0]), line_no);
    }
    if (end == text.size()) break;
  }
  try {
    return Topology(std::move(devices), std::move(edges));
  } catch (const Error& e) {
    // whole-file problems are reported against the last line read
    throw Error(e.code(), e.detail(), line_no);
  }
}

std::string format_topology(const Topology& topology) {
  std::string out;
  for (auto d : topology.devices()) out += fmt::format("device {}\n", d);
  for (const auto& e : topology.edges()) out += fmt::format("bell {} {}\n", e.a, e.b);
  return out;
}

// ------------------------------------------------------------ spanning tree

SpanningTree::SpanningTree(DeviceId root, std::map<DeviceId, DeviceId> parent,
                           std::map<DeviceId, std::vector<DeviceId>> children)
    : root_(root), parent_(std::move(parent)), children_(std::move(children)) {
  children_[root_];
  for (const auto& [c, p] : parent_) {
    children_[c];
    children_[p];
  }
  for (auto& [d, list] : children_) {
    std::sort(list.begin(), list.end());
    devices_.push_back(d);
  }
  if (parent_.count(root_)) {
    throw Error(ErrorCode::InvalidArgument, "tree root has a parent");
  }
  if (parent_.size() + 1 != devices_.size()) {
    throw Error(ErrorCode::InvalidArgument, "tree does not connect every device to the root");
  }
}

std::optional<DeviceId> SpanningTree::parent(DeviceId d) const {
  auto it = parent_.find(d);
  if (it == parent_.end()) return std::nullopt;
  return it->second;
}

const std::vector<DeviceId>& SpanningTree::children(DeviceId d) const {
  auto it = children_.find(d);
  if (it == children_.end()) {
    throw Error(ErrorCode::UnknownDevice, fmt::format("device {} is not in the tree", d));
  }
  return it->second;
}

std::size_t SpanningTree::depth(DeviceId d) const { return path_from_root(d).size() - 1; }

std::vector<DeviceId> SpanningTree::subtree(DeviceId d) const {
  std::vector<DeviceId> out;
  std::vector<DeviceId> stack{d};
  (void)children(d);
  while (!stack.empty()) {
    const DeviceId cur = stack.back();
    stack.pop_back();
    out.push_back(cur);
    for (auto c : children(cur)) stack.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<DeviceId> SpanningTree::path_from_root(DeviceId d) const {
  (void)children(d);
  std::vector<DeviceId> path{d};
  while (auto p = parent(path.back())) path.push_back(*p);
  std::reverse(path.begin(), path.end());
  return path;
}

std::size_t SpanningTree::distance(DeviceId x, DeviceId y) const {
  const auto px = path_from_root(x);
  const auto py = path_from_root(y);
  std::size_t common = 0;
  while (common < px.size() && common < py.size() && px[common] == py[common]) ++common;
  return (px.size() - common) + (py.size() - common);
}

std::optional<DeviceId> SpanningTree::next_hop(DeviceId from, DeviceId target) const {
  const auto path = path_from_root(target);
  auto it = std::find(path.begin(), path.end(), from);
  if (it == path.end() || it + 1 == path.end()) return std::nullopt;
  return *(it + 1);
}

std::set<Edge> SpanningTree::edges() const {
  std::set<Edge> out;
  for (const auto& [c, p] : parent_) out.insert(Edge::between(c, p));
  return out;
}

SpanningTree build_mst(const Topology& topology, DeviceId root) {
  if (!topology.contains(root)) {
    throw Error(ErrorCode::UnknownDevice, fmt::format("root {} is not a device", root));
  }
  std::map<DeviceId, DeviceId> parent;
  std::map<DeviceId, std::vector<DeviceId>> children;
  std::set<DeviceId> seen{root};
  std::deque<DeviceId> queue{root};
  while (!queue.empty()) {
    const DeviceId d = queue.front();
    queue.pop_front();
    children[d];
    for (auto n : topology.neighbors(d)) {
      if (seen.insert(n).second) {
        parent[n] = d;
        children[d].push_back(n);
        queue.push_back(n);
      }
    }
  }
  return SpanningTree(root, std::move(parent), std::move(children));
}

std::map<DeviceId, std::set<DeviceId>> reach_sets(const SpanningTree& tree) {
  std::map<DeviceId, std::set<DeviceId>> out;
  for (auto k : tree.children(tree.root())) {
    const auto sub = tree.subtree(k);
    out[k] = std::set<DeviceId>(sub.begin(), sub.end());
  }
  return out;
}

std::string to_dot(const Topology& topology, const SpanningTree* tree) {
  std::set<Edge> tree_edges;
  if (tree != nullptr) tree_edges = tree->edges();
  std::string out = "digraph qnet {\n";
  out += "  node [shape=circle];\n";
  for (auto d : topology.devices()) {
    if (tree != nullptr && d == tree->root()) {
      out += fmt::format("  d{} [label=\"{}\", peripheries=2];\n", d, d);
    } else {
      out += fmt::format("  d{} [label=\"{}\"];\n", d, d);
    }
  }
  for (const auto& e : topology.edges()) {
    if (tree_edges.count(e)) {
      const bool a_is_parent = tree->parent(e.b) == e.a;
      const DeviceId from = a_is_parent ? e.a : e.b;
      const DeviceId to = a_is_parent ? e.b : e.a;
      out += fmt::format("  d{} -> d{} [style=solid];\n", from, to);
    } else {
      out += fmt::format("  d{} -> d{} [style=dashed, dir=none];\n", e.a, e.b);
    }
  }
  out += "}\n";
  return out;
}

}  // namespace qnet
