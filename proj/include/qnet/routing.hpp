#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qnet/statevec.hpp"
#include "qnet/topology.hpp"

namespace qnet {

/// Routing-register labels: the device of rank r (ascending id) is r + 1,
/// the filler value bottom is n + 1. Registers have dimension addr_dim.
class LabelMap {
 public:
  explicit LabelMap(const std::vector<DeviceId>& devices);

  Label label(DeviceId d) const;
  DeviceId device(Label l) const;
  Label bottom() const noexcept { return static_cast<Label>(devices_.size()) + 1; }
  Label dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return devices_.size(); }
  const std::vector<DeviceId>& devices() const noexcept { return devices_; }
  /// Device id as text, or "⊥".
  std::string render(Label l) const;

 private:
  std::vector<DeviceId> devices_;
  std::map<DeviceId, Label> labels_;
  Label dim_;
};

enum class RoutingKind { Local, Simplified, Distributed, Unified };
std::string_view to_string(RoutingKind kind);

struct RoutingSlot {
  std::size_t branch = 0;
  /// 1-based position inside the holder's register group.
  std::size_t position = 0;
  DeviceId holder = 0;
  SiteId site;
};

/// One superposition branch as written by the builder; `labels` follow the
/// register order of the layout.
struct RoutingBranch {
  Amplitude weight;
  Labels labels;
};

class RoutingLayout {
 public:
  RoutingLayout(RoutingKind kind, LabelMap labels, std::vector<std::pair<DeviceId, SiteId>> registers,
                std::vector<RoutingBranch> branches, std::map<DeviceId, std::vector<DeviceId>> next_hops);

  RoutingKind kind() const noexcept { return kind_; }
  const LabelMap& labels() const noexcept { return labels_; }
  const std::vector<RoutingSlot>& slots() const noexcept { return slots_; }
  std::size_t branch_count() const noexcept { return branches_.size(); }
  std::size_t slots_per_branch() const noexcept { return registers_.size(); }
  const std::vector<RoutingBranch>& branches() const noexcept { return branches_; }
  RegisterLayout register_layout() const;
  std::vector<SiteId> sites() const;

  /// Registers held by `holder`, in position order (empty if none).
  std::vector<SiteId> group(DeviceId holder) const;
  std::vector<DeviceId> holders() const;
  /// Tree children of `holder`: the Bell pairs it may select.
  const std::vector<DeviceId>& next_hops(DeviceId holder) const;

  /// One line per branch: `branch <idx> amp <re,im> slots <holder:label ...>`.
  std::string dump() const;

 private:
  RoutingKind kind_;
  LabelMap labels_;
  std::vector<std::pair<DeviceId, SiteId>> registers_;
  std::vector<RoutingBranch> branches_;
  std::map<DeviceId, std::vector<DeviceId>> next_hops_;
  std::vector<RoutingSlot> slots_;
};

struct RoutingState {
  SparseState state;
  RoutingLayout layout;
};

/// One branch per root-to-leaf path (labels exclude the root), ⊥-padded to
/// the tree height; every register is held by the root.
RoutingState build_local_routing_state(const SpanningTree& tree);

/// One branch per root child: its sorted reach set, ⊥-padded.
RoutingState build_simplified_routing_state(const SpanningTree& tree);

/// Reach recursion over a source-rooted tree. Every inner device h holds
/// max(child subtree size) registers; in the branch of leaf f, each device on
/// the path to f lists the subtree of the child it continues to, all other
/// devices hold ⊥. Leaves hold nothing.
RoutingState build_distributed_mst_state(const SpanningTree& tree);

/// Uniform superposition over sources of each source's MST state on a common
/// per-device layout, tagged by one source register per device.
RoutingState build_unified_routing_state(const std::vector<SpanningTree>& trees);

using BigCount = unsigned __int128;
std::string to_string(BigCount value);

struct RoutingCost {
  BigCount single_mst_bound = 0;  // n!
  BigCount unified_bound = 0;     // n * n!
};

/// Throws RangeError for n > 20 and InvalidArgument for n == 0.
RoutingCost report_routing_cost(std::size_t n);

struct RoutingCostReport {
  RoutingCost bound;
  std::size_t local_registers = 0;        // largest local state over all owners
  std::size_t distributed_registers = 0;  // largest MST state over all sources
  std::size_t unified_registers = 0;      // excluding tags
  std::size_t unified_tags = 0;
};

RoutingCostReport report_routing_cost(const Topology& topology);

namespace sites {
/// Register `base` currently owned by `device`, e.g. "payload@4".
SiteId carried(std::string_view base, DeviceId device);
SiteId selection(DeviceId holder);
}  // namespace sites

/// Adds a selection ancilla (initially ⊥) and sets it to the child k of
/// `holder` whose register group contains both k and `target`, per term.
/// Returns the extended state and the ancilla site.
std::pair<SparseState, SiteId> select_bell_pair(const SparseState& state, const RoutingLayout& layout,
                                                DeviceId holder, Label target);

/// Same selection with the target read coherently from `target_site`.
std::pair<SparseState, SiteId> select_bell_pair(const SparseState& state, const RoutingLayout& layout,
                                                DeviceId holder, const SiteId& target_site);

/// Per-channel Bell pairs along topology edges, each usable once.
class BellLedger {
 public:
  explicit BellLedger(const Topology& topology);

  bool available(DeviceId a, DeviceId b, const std::string& channel) const;
  /// Throws InvalidArgument without an edge, ResourceConsumed on reuse.
  void consume(DeviceId a, DeviceId b, const std::string& channel);
  std::size_t consumed_count() const noexcept { return consumed_.size(); }

 private:
  const Topology* topology_;
  std::set<std::pair<Edge, std::string>> consumed_;
};

struct TeleportOutcome {
  std::string base;
  Label z = 0;  // payload register after the Hadamard layer
  Label m = 0;  // sender half of the pair
};

struct SelectionCondition {
  SiteId site;
  Label value = 0;
};

struct HopOutcome {
  SparseState state;
  std::vector<TeleportOutcome> outcomes;
  bool selected = true;
};

/// Teleports every `base@sender` register to `base@receiver` through a fresh
/// maximally entangled pair of matching dimension, conditioned on
/// `condition` when given. The condition must hold in all terms or in none;
/// in the latter case only the pair is measured and `selected` is false.
HopOutcome teleport_hop(const SparseState& state, BellLedger& ledger, DeviceId sender, DeviceId receiver,
                        const std::vector<std::string>& bases, const std::optional<SelectionCondition>& condition,
                        std::uint64_t seed);

enum class SelectionMode { Flag, Oracle };
enum class RoutingMode { Local, Distributed };

inline constexpr std::size_t kMaxSelectionAttempts = 10000;

struct RouteOptions {
  SelectionMode selection = SelectionMode::Flag;
  RoutingMode routing = RoutingMode::Distributed;
  std::uint64_t seed = 0;
};

struct HopRecord {
  DeviceId sender = 0;
  DeviceId receiver = 0;
  /// Selection rounds at this hop; a round reading ⊥ re-prepares the routing
  /// registers and tries again.
  std::size_t attempts = 0;
  double success_probability = 0.0;
  std::vector<TeleportOutcome> outcomes;
};

struct TeleportJob {
  DeviceId source = 0;
  DeviceId target = 0;
  std::vector<Amplitude> payload;  // normalized input
  std::vector<HopRecord> hops;
  DeviceId holder = 0;
  SparseState final_state;
  double fidelity = 0.0;
};

/// "re,im;re,im;..." with a power-of-two number of entries.
std::vector<Amplitude> parse_payload(std::string_view spec);

/// Moves the payload and the target-address register hop by hop until the
/// target holds them.
TeleportJob route(const Topology& topology, DeviceId source, DeviceId target,
                  const std::vector<Amplitude>& payload, const RouteOptions& options);

}  // namespace qnet
