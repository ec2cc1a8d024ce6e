#include "qnet/scenarios.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "qnet/error.hpp"

namespace qnet {

std::string to_string(const Program& program) {
  std::string s;
  for (const auto& step : program) {
    if (!s.empty()) s += ' ';
    if (step.kind == ProgramStep::Kind::Op) {
      s += fmt::format("{}{}", op_name(step.op), step.device);
    } else {
      s += fmt::format("CX{}{}", step.device, step.other);
    }
  }
  return s.empty() ? "-" : s;
}

namespace {

RegisterLayout work_layout(const std::vector<DeviceId>& devices) {
  std::vector<Site> s;
  for (auto d : devices) s.push_back({sites::work(d), 2});
  return RegisterLayout(std::move(s));
}

SparseState three_qubit(const std::vector<std::pair<Amplitude, Labels>>& terms) {
  return superpose(work_layout({1, 2, 3}), terms);
}

SparseState ghz() { return three_qubit({{1.0, {0, 0, 0}}, {1.0, {1, 1, 1}}}); }

Program ghz_from_zero() {
  return {ProgramStep::gate(OpCode::H, 1), ProgramStep::xor_add(1, 2), ProgramStep::xor_add(1, 3)};
}

std::vector<SiteId> address_sites(const std::vector<DeviceId>& devices) {
  std::vector<SiteId> out;
  for (auto d : devices) out.push_back(sites::address(d));
  return out;
}

void validate(const OverlayFixture& f) {
  const std::size_t b = f.assignments.size();
  if (b == 0 || f.alphas.size() != b || f.networks.size() != b || f.programs.size() != b) {
    throw Error(ErrorCode::BadFixture,
                fmt::format("fixture has {} assignments, {} weights, {} network states and {} programs", b,
                            f.alphas.size(), f.networks.size(), f.programs.size()));
  }
  const RegisterLayout work = work_layout(f.devices);
  auto check_state = [&](const SparseState& s, const std::string& what) {
    if (!(s.layout() == work)) throw Error(ErrorCode::BadFixture, what + " is not a state of the work qubits");
    if (std::abs(s.norm_squared() - 1.0) > kNormTolerance) {
      throw Error(ErrorCode::BadFixture, fmt::format("{} has squared norm {}", what, s.norm_squared()));
    }
  };
  check_state(f.target, "target state");
  for (std::size_t j = 0; j < b; ++j) {
    check_state(f.networks[j], fmt::format("network state {}", j + 1));
    AddressTuple sorted = f.assignments[j];
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (sorted.size() != f.devices.size() || sorted[i] != i + 1) {
        throw Error(ErrorCode::BadFixture, fmt::format("assignment {} is not a permutation of 1..{}", j + 1,
                                                       f.devices.size()));
      }
    }
    for (const auto& step : f.programs[j]) {
      std::vector<DeviceId> used{step.device};
      if (step.kind == ProgramStep::Kind::XorAdd) {
        used.push_back(step.other);
        if (step.device == step.other) {
          throw Error(ErrorCode::BadFixture, fmt::format("program {} XOR-adds device {} into itself", j + 1, step.device));
        }
      }
      for (auto d : used) {
        if (std::find(f.devices.begin(), f.devices.end(), d) == f.devices.end()) {
          throw Error(ErrorCode::BadFixture, fmt::format("program {} uses unknown device {}", j + 1, d));
        }
      }
    }
  }
}

GateSpec gate_of(const ProgramStep& step) {
  if (step.kind == ProgramStep::Kind::Op) return catalog_gate(step.op, sites::work(step.device));
  return gates::xor_add(sites::work(step.device), sites::work(step.other));
}

}  // namespace

OverlayFixture default_overlay_fixture() {
  OverlayFixture f;
  f.devices = {1, 2, 3};
  f.assignments = {{1, 2, 3}, {2, 3, 1}, {3, 1, 2}};
  f.alphas = {1.0, 1.0, 1.0};
  std::vector<std::pair<Amplitude, Labels>> plus;
  for (Label x = 0; x < 8; ++x) plus.emplace_back(1.0, Labels{x >> 2, (x >> 1) & 1, x & 1});
  f.networks = {ghz(), three_qubit(plus), three_qubit({{1.0, {0, 0, 0}}})};
  Program from_plus{ProgramStep::gate(OpCode::H, 1), ProgramStep::gate(OpCode::H, 2), ProgramStep::gate(OpCode::H, 3)};
  for (const auto& s : ghz_from_zero()) from_plus.push_back(s);
  f.programs = {{}, from_plus, ghz_from_zero()};
  f.target = ghz();
  return f;
}

OverlayFixture perturbed_overlay_fixture() {
  OverlayFixture f = default_overlay_fixture();
  f.programs[1].pop_back();
  return f;
}

SparseState build_overlay_state(const OverlayFixture& fixture) {
  validate(fixture);
  const Label dim = address_dimension(fixture.devices.size());
  std::vector<Site> addr;
  for (auto d : fixture.devices) addr.push_back({sites::address(d), dim});
  const RegisterLayout layout = RegisterLayout(addr).concat(work_layout(fixture.devices));

  std::vector<std::pair<Amplitude, Labels>> terms;
  for (std::size_t j = 0; j < fixture.assignments.size(); ++j) {
    if (fixture.alphas[j] == Amplitude{}) continue;
    for (const auto& [labels, amp] : fixture.networks[j].terms()) {
      Labels l = fixture.assignments[j];
      l.insert(l.end(), labels.begin(), labels.end());
      terms.emplace_back(fixture.alphas[j] * amp, std::move(l));
    }
  }
  try {
    return superpose(layout, terms);
  } catch (const Error& e) {
    throw Error(ErrorCode::BadFixture, fmt::format("overlay state is empty: {}", e.detail()));
  }
}

OverlayResult run_overlay_protocol(const OverlayFixture& fixture) {
  SparseState state = build_overlay_state(fixture);
  const auto addr = address_sites(fixture.devices);
  for (std::size_t j = 0; j < fixture.assignments.size(); ++j) {
    if (fixture.alphas[j] == Amplitude{}) continue;
    for (const auto& step : fixture.programs[j]) {
      state = apply_controlled(state, addr, fixture.assignments[j], gate_of(step));
    }
  }

  OverlayFixture expected_fixture = fixture;
  for (auto& n : expected_fixture.networks) n = fixture.target;
  const SparseState expected = build_overlay_state(expected_fixture);

  OverlayResult r;
  r.fidelity = fidelity(state, expected);
  for (std::size_t j = 0; j < fixture.assignments.size(); ++j) {
    if (fixture.alphas[j] == Amplitude{}) continue;
    const SparseState branch = project_sites(state, addr, fixture.assignments[j]).first;
    const double f = fidelity(branch, fixture.target);
    r.branches.push_back({j + 1, fixture.assignments[j], f});
    if (f < 1.0 - 1e-9) r.failing.push_back(j + 1);
  }
  r.final_state = std::move(state);
  return r;
}

const SparseState& FigureFixture::golden(RoutingKind kind) const {
  for (const auto& [k, s] : goldens) {
    if (k == kind) return s;
  }
  throw Error(ErrorCode::UnknownFixture, fmt::format("{} has no {} golden state", name, to_string(kind)));
}

namespace {

constexpr std::string_view kFig2Text = R"(# Seven-device Bell-pair network used for local routing from device 1.
# Tree edges (root 1): 1-2 2-3 1-7 7-5 5-4 5-6.
# The cross links 3-5 and 4-6 close cycles; a breadth-first tree from
# device 1 never selects them.
device 1
device 2
device 3
device 4
device 5
device 6
device 7
bell 1 2
bell 2 3
bell 1 7
bell 7 5
bell 5 4
bell 5 6
bell 3 5
bell 4 6
)";

constexpr std::string_view kFig3Text = R"(# Eight-device Bell-pair network used for distributed (MST-state) routing.
# Tree edges (root 1): 1-2 2-3 1-4 4-5 5-6 5-7 6-8.
# The cross links 3-5 and 7-8 close cycles; a breadth-first tree from
# device 1 never selects them.
device 1
device 2
device 3
device 4
device 5
device 6
device 7
device 8
bell 1 2
bell 2 3
bell 1 4
bell 4 5
bell 5 6
bell 5 7
bell 6 8
bell 3 5
bell 7 8
)";

SparseState golden_state(const std::vector<SiteId>& ids, const std::vector<Labels>& rows) {
  std::vector<Site> s;
  for (const auto& id : ids) s.push_back({id, 16});
  std::vector<std::pair<Amplitude, Labels>> terms;
  for (const auto& r : rows) terms.emplace_back(1.0, r);
  return superpose(RegisterLayout(s), terms);
}

}  // namespace

FigureFixture load_figure_fixture(std::string_view name) {
  FigureFixture f;
  f.name = std::string(name);
  if (name == "fig2") {
    f.topology_text = std::string(kFig2Text);
    constexpr Label bot = 8;
    // |2>|3>|⊥> + |7>|5>(|4> + |6>)
    f.goldens.emplace_back(RoutingKind::Local,
                           golden_state({"loc:1:1", "loc:1:2", "loc:1:3"}, {{2, 3, bot}, {7, 5, 4}, {7, 5, 6}}));
    // |2>|3>|⊥>|⊥> + |4>|5>|6>|7>
    f.goldens.emplace_back(RoutingKind::Simplified,
                           golden_state({"reach:1:1", "reach:1:2", "reach:1:3", "reach:1:4"},
                                        {{2, 3, bot, bot}, {4, 5, 6, 7}}));
  } else if (name == "fig3") {
    f.topology_text = std::string(kFig3Text);
    constexpr Label bot = 9;
    // |2,3>_1 |3>_2 + |4,5,6,7,8>_1 |5,6,7,8>_4 (|7>_5 + |6,8>_5 |8>_6), ⊥-padded
    f.goldens.emplace_back(
        RoutingKind::Distributed,
        golden_state({"mst:1:1:1", "mst:1:1:2", "mst:1:1:3", "mst:1:1:4", "mst:1:1:5", "mst:1:2:1", "mst:1:4:1",
                      "mst:1:4:2", "mst:1:4:3", "mst:1:4:4", "mst:1:5:1", "mst:1:5:2", "mst:1:6:1"},
                     {{2, 3, bot, bot, bot, 3, bot, bot, bot, bot, bot, bot, bot},
                      {4, 5, 6, 7, 8, bot, 5, 6, 7, 8, 7, bot, bot},
                      {4, 5, 6, 7, 8, bot, 5, 6, 7, 8, 6, 8, 8}}));
    f.goldens.emplace_back(RoutingKind::Simplified,
                           golden_state({"reach:1:1", "reach:1:2", "reach:1:3", "reach:1:4", "reach:1:5"},
                                        {{2, 3, bot, bot, bot}, {4, 5, 6, 7, 8}}));
  } else {
    throw Error(ErrorCode::UnknownFixture, fmt::format("unknown figure fixture '{}' (expected fig2 or fig3)", name));
  }
  f.topology = parse_topology(f.topology_text);
  return f;
}

}  // namespace qnet
