#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "qnet/addressing.hpp"
#include "qnet/routing.hpp"
#include "qnet/statevec.hpp"
#include "qnet/topology.hpp"

namespace qnet {

/// One step of a branch protocol on the work qubits.
struct ProgramStep {
  enum class Kind { Op, XorAdd };
  Kind kind = Kind::Op;
  OpCode op = OpCode::I;
  DeviceId device = 0;  // Op target, or XorAdd source
  DeviceId other = 0;   // XorAdd destination

  static ProgramStep gate(OpCode op, DeviceId device) { return {Kind::Op, op, device, 0}; }
  static ProgramStep xor_add(DeviceId src, DeviceId dst) { return {Kind::XorAdd, OpCode::I, src, dst}; }
};
using Program = std::vector<ProgramStep>;

std::string to_string(const Program& program);

/// Network states attached to address configurations, plus per-branch
/// protocols that should all end in the common state `target`.
struct OverlayFixture {
  std::vector<DeviceId> devices;
  std::vector<AddressTuple> assignments;
  std::vector<Amplitude> alphas;
  std::vector<SparseState> networks;  // over the work qubits of `devices`
  std::vector<Program> programs;
  SparseState target;
};

/// Three cyclic assignments carrying GHZ, |+++> and |000>, each driven to GHZ.
OverlayFixture default_overlay_fixture();
/// Default fixture with the last XOR-add of the second branch removed.
OverlayFixture perturbed_overlay_fixture();

/// Throws BadFixture on mismatched sizes, non-normalized states, invalid
/// assignments or foreign devices. Zero-weight branches are dropped.
SparseState build_overlay_state(const OverlayFixture& fixture);

struct OverlayBranchReport {
  std::size_t branch = 0;
  AddressTuple addresses;
  double fidelity = 0.0;
};

struct OverlayResult {
  SparseState final_state;
  /// Against (address state) (x) target.
  double fidelity = 0.0;
  std::vector<OverlayBranchReport> branches;
  /// Branches whose own fidelity to the target is below 1 - 1e-9.
  std::vector<std::size_t> failing;
};

OverlayResult run_overlay_protocol(const OverlayFixture& fixture);

/// Built-in figure networks with golden routing states for device 1.
struct FigureFixture {
  std::string name;
  std::string topology_text;
  Topology topology;
  DeviceId root = 1;
  std::vector<std::pair<RoutingKind, SparseState>> goldens;

  const SparseState& golden(RoutingKind kind) const;
};

/// "fig2" (seven devices) or "fig3" (eight devices); UnknownFixture otherwise.
FigureFixture load_figure_fixture(std::string_view name);

}  // namespace qnet
