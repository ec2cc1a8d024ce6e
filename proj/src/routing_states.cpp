#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "qnet/addressing.hpp"
#include "qnet/error.hpp"
#include "qnet/routing.hpp"

namespace qnet {

LabelMap::LabelMap(const std::vector<DeviceId>& devices) : devices_(devices) {
  std::sort(devices_.begin(), devices_.end());
  devices_.erase(std::unique(devices_.begin(), devices_.end()), devices_.end());
  for (std::size_t r = 0; r < devices_.size(); ++r) labels_[devices_[r]] = static_cast<Label>(r + 1);
  dim_ = address_dimension(devices_.size());
}

Label LabelMap::label(DeviceId d) const {
  auto it = labels_.find(d);
  if (it == labels_.end()) throw Error(ErrorCode::UnknownDevice, fmt::format("device {} is not in the network", d));
  return it->second;
}

DeviceId LabelMap::device(Label l) const {
  if (l == 0 || l > devices_.size()) {
    throw Error(ErrorCode::InvalidLabel, fmt::format("label {} does not name a device", l));
  }
  return devices_[l - 1];
}

std::string LabelMap::render(Label l) const {
  if (l == bottom()) return "⊥";
  return std::to_string(device(l));
}

std::string_view to_string(RoutingKind kind) {
  switch (kind) {
    case RoutingKind::Local: return "local";
    case RoutingKind::Simplified: return "simplified";
    case RoutingKind::Distributed: return "distributed";
    case RoutingKind::Unified: return "unified";
  }
  return "?";
}

RoutingLayout::RoutingLayout(RoutingKind kind, LabelMap labels, std::vector<std::pair<DeviceId, SiteId>> registers,
                             std::vector<RoutingBranch> branches,
                             std::map<DeviceId, std::vector<DeviceId>> next_hops)
    : kind_(kind),
      labels_(std::move(labels)),
      registers_(std::move(registers)),
      branches_(std::move(branches)),
      next_hops_(std::move(next_hops)) {
  std::map<DeviceId, std::size_t> position;
  std::vector<std::size_t> positions;
  for (const auto& [holder, site] : registers_) positions.push_back(++position[holder]);
  for (std::size_t b = 0; b < branches_.size(); ++b) {
    if (branches_[b].labels.size() != registers_.size()) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("routing branch {} has {} labels for {} registers", b,
                                                          branches_[b].labels.size(), registers_.size()));
    }
    for (std::size_t i = 0; i < registers_.size(); ++i) {
      slots_.push_back({b, positions[i], registers_[i].first, registers_[i].second});
    }
  }
}

RegisterLayout RoutingLayout::register_layout() const {
  std::vector<Site> s;
  for (const auto& [holder, site] : registers_) s.push_back({site, labels_.dim()});
  return RegisterLayout(std::move(s));
}

std::vector<SiteId> RoutingLayout::sites() const {
  std::vector<SiteId> out;
  for (const auto& r : registers_) out.push_back(r.second);
  return out;
}

std::vector<SiteId> RoutingLayout::group(DeviceId holder) const {
  std::vector<SiteId> out;
  for (const auto& [h, site] : registers_) {
    if (h == holder) out.push_back(site);
  }
  return out;
}

std::vector<DeviceId> RoutingLayout::holders() const {
  std::vector<DeviceId> out;
  for (const auto& r : registers_) {
    if (std::find(out.begin(), out.end(), r.first) == out.end()) out.push_back(r.first);
  }
  return out;
}

const std::vector<DeviceId>& RoutingLayout::next_hops(DeviceId holder) const {
  static const std::vector<DeviceId> kNone;
  auto it = next_hops_.find(holder);
  return it == next_hops_.end() ? kNone : it->second;
}

std::string RoutingLayout::dump() const {
  double norm = 0.0;
  for (const auto& b : branches_) norm += std::norm(b.weight);
  norm = std::sqrt(norm);
  std::string out;
  for (std::size_t b = 0; b < branches_.size(); ++b) {
    const Amplitude a = norm > 0 ? branches_[b].weight / norm : Amplitude{};
    out += fmt::format("branch {} amp {:.12g},{:.12g} slots", b, a.real(), a.imag() == 0.0 ? 0.0 : a.imag());
    for (std::size_t i = 0; i < registers_.size(); ++i) {
      out += fmt::format(" {}:{}", registers_[i].first, labels_.render(branches_[b].labels[i]));
    }
    out += '\n';
  }
  return out;
}

namespace {

SparseState state_of(const RoutingLayout& layout) {
  std::vector<std::pair<Amplitude, Labels>> terms;
  for (const auto& b : layout.branches()) terms.emplace_back(b.weight, b.labels);
  return superpose(layout.register_layout(), terms);
}

Labels padded(const std::vector<DeviceId>& devices, std::size_t width, const LabelMap& labels) {
  Labels out;
  for (auto d : devices) out.push_back(labels.label(d));
  std::sort(out.begin(), out.end());
  out.resize(width, labels.bottom());
  return out;
}

void collect_paths(const SpanningTree& tree, DeviceId d, std::vector<DeviceId>& path,
                   std::vector<std::vector<DeviceId>>& out) {
  if (tree.is_leaf(d)) {
    out.push_back(path);
    return;
  }
  for (auto c : tree.children(d)) {
    path.push_back(c);
    collect_paths(tree, c, path, out);
    path.pop_back();
  }
}

/// Root-to-leaf paths (excluding the root) in depth-first ascending order.
std::vector<std::vector<DeviceId>> leaf_paths(const SpanningTree& tree) {
  std::vector<std::vector<DeviceId>> out;
  std::vector<DeviceId> path;
  if (!tree.is_leaf(tree.root())) collect_paths(tree, tree.root(), path, out);
  return out;
}

std::map<DeviceId, std::vector<DeviceId>> children_map(const SpanningTree& tree) {
  std::map<DeviceId, std::vector<DeviceId>> out;
  for (auto d : tree.devices()) {
    if (!tree.is_leaf(d)) out[d] = tree.children(d);
  }
  return out;
}

// Per-holder MST groups of one source tree: width and, per leaf branch, labels.
struct MstGroups {
  std::map<DeviceId, std::size_t> width;  // inner devices only
  std::vector<std::map<DeviceId, std::vector<DeviceId>>> branches;  // holder -> listed subtree
};

MstGroups mst_groups(const SpanningTree& tree) {
  MstGroups g;
  for (auto d : tree.devices()) {
    std::size_t w = 0;
    for (auto c : tree.children(d)) w = std::max(w, tree.subtree(c).size());
    if (w > 0) g.width[d] = w;
  }
  for (const auto& path : leaf_paths(tree)) {
    std::map<DeviceId, std::vector<DeviceId>> listed;
    DeviceId holder = tree.root();
    for (auto next : path) {
      listed[holder] = tree.subtree(next);
      holder = next;
    }
    g.branches.push_back(std::move(listed));
  }
  return g;
}

}  // namespace

RoutingState build_local_routing_state(const SpanningTree& tree) {
  const LabelMap labels(tree.devices());
  const DeviceId owner = tree.root();
  const auto paths = leaf_paths(tree);
  std::size_t width = 0;
  for (const auto& p : paths) width = std::max(width, p.size());

  std::vector<std::pair<DeviceId, SiteId>> registers;
  for (std::size_t l = 1; l <= width; ++l) registers.emplace_back(owner, fmt::format("loc:{}:{}", owner, l));
  std::vector<RoutingBranch> branches;
  for (const auto& p : paths) {
    Labels row;
    for (auto d : p) row.push_back(labels.label(d));
    row.resize(width, labels.bottom());
    branches.push_back({1.0, std::move(row)});
  }
  if (branches.empty()) branches.push_back({1.0, {}});
  RoutingLayout layout(RoutingKind::Local, labels, std::move(registers), std::move(branches),
                       {{owner, tree.children(owner)}});
  SparseState state = state_of(layout);
  return {std::move(state), std::move(layout)};
}

RoutingState build_simplified_routing_state(const SpanningTree& tree) {
  const LabelMap labels(tree.devices());
  const DeviceId owner = tree.root();
  const auto reach = reach_sets(tree);
  std::size_t width = 0;
  for (const auto& [k, set] : reach) width = std::max(width, set.size());

  std::vector<std::pair<DeviceId, SiteId>> registers;
  for (std::size_t l = 1; l <= width; ++l) registers.emplace_back(owner, fmt::format("reach:{}:{}", owner, l));
  std::vector<RoutingBranch> branches;
  for (const auto& [k, set] : reach) {
    branches.push_back({1.0, padded({set.begin(), set.end()}, width, labels)});
  }
  if (branches.empty()) branches.push_back({1.0, {}});
  RoutingLayout layout(RoutingKind::Simplified, labels, std::move(registers), std::move(branches),
                       {{owner, tree.children(owner)}});
  SparseState state = state_of(layout);
  return {std::move(state), std::move(layout)};
}

RoutingState build_distributed_mst_state(const SpanningTree& tree) {
  const LabelMap labels(tree.devices());
  const DeviceId source = tree.root();
  const MstGroups g = mst_groups(tree);

  std::vector<std::pair<DeviceId, SiteId>> registers;
  for (const auto& [holder, w] : g.width) {
    for (std::size_t l = 1; l <= w; ++l) registers.emplace_back(holder, fmt::format("mst:{}:{}:{}", source, holder, l));
  }
  std::vector<RoutingBranch> branches;
  for (const auto& listed : g.branches) {
    Labels row;
    for (const auto& [holder, w] : g.width) {
      auto it = listed.find(holder);
      const Labels part = padded(it == listed.end() ? std::vector<DeviceId>{} : it->second, w, labels);
      row.insert(row.end(), part.begin(), part.end());
    }
    branches.push_back({1.0, std::move(row)});
  }
  if (branches.empty()) branches.push_back({1.0, {}});
  RoutingLayout layout(RoutingKind::Distributed, labels, std::move(registers), std::move(branches),
                       children_map(tree));
  SparseState state = state_of(layout);
  return {std::move(state), std::move(layout)};
}

RoutingState build_unified_routing_state(const std::vector<SpanningTree>& trees) {
  if (trees.empty()) throw Error(ErrorCode::InvalidArgument, "unified routing state needs at least one tree");
  const LabelMap labels(trees.front().devices());
  std::set<DeviceId> sources;
  std::vector<MstGroups> groups;
  std::map<DeviceId, std::size_t> width;
  for (const auto& t : trees) {
    if (LabelMap(t.devices()).devices() != labels.devices()) {
      throw Error(ErrorCode::InvalidArgument, "trees of the unified state span different devices");
    }
    if (!sources.insert(t.root()).second) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("two trees for source {}", t.root()));
    }
    groups.push_back(mst_groups(t));
    for (const auto& [h, w] : groups.back().width) width[h] = std::max(width[h], w);
  }

  std::vector<std::pair<DeviceId, SiteId>> registers;
  for (const auto& [holder, w] : width) {
    for (std::size_t l = 1; l <= w; ++l) registers.emplace_back(holder, fmt::format("uni:{}:{}", holder, l));
  }
  for (auto d : labels.devices()) registers.emplace_back(d, fmt::format("tag:{}", d));

  const double n = static_cast<double>(trees.size());
  std::vector<RoutingBranch> branches;
  for (std::size_t s = 0; s < trees.size(); ++s) {
    const auto& g = groups[s];
    const std::size_t leaf_branches = std::max<std::size_t>(g.branches.size(), 1);
    const double weight = 1.0 / std::sqrt(n * static_cast<double>(leaf_branches));
    const std::vector<std::map<DeviceId, std::vector<DeviceId>>> expanded =
        g.branches.empty() ? std::vector<std::map<DeviceId, std::vector<DeviceId>>>{{}} : g.branches;
    for (const auto& listed : expanded) {
      Labels row;
      for (const auto& [holder, w] : width) {
        auto it = listed.find(holder);
        const Labels part = padded(it == listed.end() ? std::vector<DeviceId>{} : it->second, w, labels);
        row.insert(row.end(), part.begin(), part.end());
      }
      row.resize(row.size() + labels.size(), labels.label(trees[s].root()));
      branches.push_back({weight, std::move(row)});
    }
  }
  RoutingLayout layout(RoutingKind::Unified, labels, std::move(registers), std::move(branches), {});
  SparseState state = state_of(layout);
  return {std::move(state), std::move(layout)};
}

std::string to_string(BigCount value) {
  if (value == 0) return "0";
  std::string s;
  while (value > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
    value /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

RoutingCost report_routing_cost(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "routing cost needs at least one device");
  if (n > 20) throw Error(ErrorCode::RangeError, fmt::format("n = {} overflows the cost counters (max 20)", n));
  BigCount f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= i;
  return {f, f * n};
}

RoutingCostReport report_routing_cost(const Topology& topology) {
  RoutingCostReport r;
  r.bound = report_routing_cost(topology.size());
  std::vector<SpanningTree> trees;
  for (auto d : topology.devices()) {
    trees.push_back(build_mst(topology, d));
    r.local_registers = std::max(r.local_registers, build_local_routing_state(trees.back()).layout.slots_per_branch());
    r.distributed_registers =
        std::max(r.distributed_registers, build_distributed_mst_state(trees.back()).layout.slots_per_branch());
  }
  const auto unified = build_unified_routing_state(trees);
  r.unified_tags = topology.size();
  r.unified_registers = unified.layout.slots_per_branch() - r.unified_tags;
  return r;
}

}  // namespace qnet
