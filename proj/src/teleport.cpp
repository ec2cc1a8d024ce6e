#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "qnet/error.hpp"
#include "qnet/rng.hpp"
#include "qnet/routing.hpp"

namespace qnet {

SiteId sites::carried(std::string_view base, DeviceId device) { return fmt::format("{}@{}", base, device); }
SiteId sites::selection(DeviceId holder) { return fmt::format("sel:{}", holder); }

namespace {

struct SelectionSetup {
  SparseState state;
  SiteId ancilla;
  std::vector<SiteId> group;
  Labels children;
};

SelectionSetup prepare_selection(const SparseState& state, const RoutingLayout& layout, DeviceId holder) {
  const LabelMap& labels = layout.labels();
  labels.label(holder);
  SelectionSetup s{state, sites::selection(holder), layout.group(holder), {}};
  if (s.group.empty() || layout.next_hops(holder).empty()) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("device {} holds no routing registers to select from", holder));
  }
  for (auto c : layout.next_hops(holder)) s.children.push_back(labels.label(c));
  const RegisterLayout anc({{s.ancilla, labels.dim()}});
  s.state = merge_layouts(state, make_basis_state(anc, {labels.bottom()}));
  return s;
}

// For every child k and positions (p, l): where slot p reads k and slot l
// reads t, move the ancilla from ⊥ to k. Labels inside one group are
// distinct, so at most one (k, p, l) fires per term.
SparseState select_into(SparseState state, const SelectionSetup& s, Label bottom, Label target,
                        const std::optional<SiteId>& target_site) {
  for (Label k : s.children) {
    for (std::size_t p = 0; p < s.group.size(); ++p) {
      for (std::size_t l = 0; l < s.group.size(); ++l) {
        std::vector<SiteId> controls;
        Labels values;
        if (p == l) {
          if (k != target) continue;
          controls = {s.group[p]};
          values = {k};
        } else {
          controls = {s.group[p], s.group[l]};
          values = {k, target};
        }
        if (target_site) {
          controls.push_back(*target_site);
          values.push_back(target);
        }
        state = apply_controlled(state, controls, values, gates::swap_values(s.ancilla, bottom, k));
      }
    }
  }
  return state;
}

std::vector<Amplitude> normalized_payload(std::vector<Amplitude> amps) {
  if (amps.size() < 2 || !std::has_single_bit(amps.size())) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("payload needs a power-of-two number of amplitudes (>= 2), got {}", amps.size()));
  }
  double norm = 0.0;
  for (auto a : amps) norm += std::norm(a);
  if (norm < kNormTolerance) throw Error(ErrorCode::ZeroState, "payload has zero norm");
  for (auto& a : amps) a /= std::sqrt(norm);
  return amps;
}

}  // namespace

std::pair<SparseState, SiteId> select_bell_pair(const SparseState& state, const RoutingLayout& layout,
                                                DeviceId holder, Label target) {
  const LabelMap& labels = layout.labels();
  if (target == 0 || target > labels.size()) {
    throw Error(ErrorCode::UnknownDevice, fmt::format("target label {} is outside 1..{}", target, labels.size()));
  }
  if (target == labels.label(holder)) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("device {} is already the target", holder));
  }
  SelectionSetup s = prepare_selection(state, layout, holder);
  SparseState out = select_into(s.state, s, labels.bottom(), target, std::nullopt);
  return {std::move(out), s.ancilla};
}

std::pair<SparseState, SiteId> select_bell_pair(const SparseState& state, const RoutingLayout& layout,
                                                DeviceId holder, const SiteId& target_site) {
  const LabelMap& labels = layout.labels();
  if (state.layout().dim(target_site) != labels.dim()) {
    throw Error(ErrorCode::DimMismatch, fmt::format("target register {} must have dimension {}", target_site,
                                                    labels.dim()));
  }
  SelectionSetup s = prepare_selection(state, layout, holder);
  SparseState out = s.state;
  const Label own = labels.label(holder);
  for (Label t = 1; t <= labels.size(); ++t) {
    if (t != own) out = select_into(std::move(out), s, labels.bottom(), t, target_site);
  }
  return {std::move(out), s.ancilla};
}

BellLedger::BellLedger(const Topology& topology) : topology_(&topology) {}

bool BellLedger::available(DeviceId a, DeviceId b, const std::string& channel) const {
  return topology_->has_edge(a, b) && !consumed_.count({Edge::between(a, b), channel});
}

void BellLedger::consume(DeviceId a, DeviceId b, const std::string& channel) {
  if (!topology_->has_edge(a, b)) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("devices {} and {} share no Bell pair", a, b));
  }
  if (!consumed_.insert({Edge::between(a, b), channel}).second) {
    throw Error(ErrorCode::ResourceConsumed,
                fmt::format("Bell pair {}-{} for {} was already consumed", a, b, channel));
  }
}

HopOutcome teleport_hop(const SparseState& state, BellLedger& ledger, DeviceId sender, DeviceId receiver,
                        const std::vector<std::string>& bases, const std::optional<SelectionCondition>& condition,
                        std::uint64_t seed) {
  std::vector<SiteId> controls;
  Labels values;
  bool selected = true;
  if (condition) {
    controls = {condition->site};
    values = {condition->value};
    const auto dist = outcome_distribution(state, controls);
    auto it = dist.find(values);
    const double p = it == dist.end() ? 0.0 : it->second;
    if (p > kNormTolerance && p < 1.0 - kNormTolerance) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("selection {} = {} holds with probability {}; measure it first", condition->site,
                              condition->value, p));
    }
    selected = p >= 1.0 - kNormTolerance;
  }

  CounterRng rng(seed);
  HopOutcome out{state, {}, selected};
  for (const auto& base : bases) {
    const SiteId src = sites::carried(base, sender);
    const SiteId dst = sites::carried(base, receiver);
    const Label dim = out.state.layout().dim(src);
    if (!std::has_single_bit(dim)) {
      throw Error(ErrorCode::DimMismatch, fmt::format("register {} has dimension {}, not a power of two", src, dim));
    }
    ledger.consume(sender, receiver, base);

    const SiteId half = fmt::format("epr:{}-{}:{}", sender, receiver, base);
    std::vector<std::pair<Amplitude, Labels>> pair_terms;
    for (Label x = 0; x < dim; ++x) pair_terms.emplace_back(1.0, Labels{x, x});
    SparseState s = merge_layouts(out.state, superpose(RegisterLayout({{half, dim}, {dst, dim}}), pair_terms));

    if (!selected) {
      out.state = measure_sites(s, {half, dst}, rng.next_u64()).post_state;
      continue;
    }
    s = apply_controlled(s, controls, values, gates::xor_add(src, half));
    s = apply_controlled(s, controls, values, gates::walsh_hadamard(src, dim));
    Measurement m = measure_sites(s, {src, half}, rng.next_u64());
    const Label z = m.outcome[0];
    const Label x = m.outcome[1];
    s = apply_controlled(m.post_state, controls, values, gates::xor_constant(dst, x));
    s = apply_controlled(s, controls, values, gates::parity_phase(dst, dim, z));
    out.state = std::move(s);
    out.outcomes.push_back({base, z, x});
  }
  return out;
}

std::vector<Amplitude> parse_payload(std::string_view spec) {
  auto parse_double = [&](std::string_view tok) {
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("bad number '{}' in payload", tok));
    }
    return v;
  };
  std::vector<Amplitude> out;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const std::size_t end = std::min(spec.find(';', start), spec.size());
    const std::string_view entry = spec.substr(start, end - start);
    const std::size_t comma = entry.find(',');
    if (comma == std::string_view::npos) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("payload entry '{}' is not re,im", entry));
    }
    out.emplace_back(parse_double(entry.substr(0, comma)), parse_double(entry.substr(comma + 1)));
    start = end + 1;
  }
  return normalized_payload(std::move(out));
}

TeleportJob route(const Topology& topology, DeviceId source, DeviceId target, const std::vector<Amplitude>& payload,
                  const RouteOptions& options) {
  for (auto d : {source, target}) {
    if (!topology.contains(d)) throw Error(ErrorCode::UnknownDevice, fmt::format("device {} is not in the network", d));
  }
  if (source == target) throw Error(ErrorCode::InvalidArgument, "source and target coincide");

  TeleportJob job;
  job.source = source;
  job.target = target;
  job.payload = normalized_payload(payload);
  const LabelMap labels({topology.devices().begin(), topology.devices().end()});
  const Label t = labels.label(target);
  const Label payload_dim = static_cast<Label>(job.payload.size());
  const std::vector<std::string> bases{"payload", "target"};

  std::vector<std::pair<Amplitude, Labels>> in_terms;
  for (Label i = 0; i < payload_dim; ++i) in_terms.emplace_back(job.payload[i], Labels{i, t});
  SparseState state =
      superpose(RegisterLayout({{sites::carried("payload", source), payload_dim}, {sites::carried("target", source), labels.dim()}}),
                in_terms);

  const SpanningTree source_tree = build_mst(topology, source);
  std::optional<RoutingLayout> mst_layout;
  if (options.routing == RoutingMode::Distributed) {
    auto r = build_distributed_mst_state(source_tree);
    state = merge_layouts(state, r.state);
    mst_layout = std::move(r.layout);
  }

  CounterRng rng(options.seed);
  BellLedger ledger(topology);
  DeviceId holder = source;
  while (holder != target) {
    std::optional<RoutingState> local;
    std::optional<SpanningTree> holder_tree;
    if (options.routing == RoutingMode::Local) {
      holder_tree = build_mst(topology, holder);
      local = build_local_routing_state(*holder_tree);
      state = merge_layouts(state, local->state);
    }
    const RoutingLayout& layout = local ? local->layout : *mst_layout;
    const SpanningTree& tree = holder_tree ? *holder_tree : source_tree;

    HopRecord hop;
    hop.sender = holder;
    const SparseState before = state;
    std::optional<Label> chosen;
    SparseState selected;
    SiteId ancilla;
    while (!chosen) {
      if (++hop.attempts > kMaxSelectionAttempts) {
        throw Error(ErrorCode::RoutingInconsistency,
                    fmt::format("no Bell pair selected at device {} after {} attempts", holder, kMaxSelectionAttempts));
      }
      auto [s, anc] = select_bell_pair(before, layout, holder, sites::carried("target", holder));
      ancilla = anc;
      const auto dist = outcome_distribution(s, {ancilla});
      double p_bottom = 0.0;
      std::size_t candidates = 0;
      for (const auto& [value, p] : dist) {
        if (value[0] == labels.bottom()) {
          p_bottom = p;
        } else {
          ++candidates;
        }
      }
      if (candidates != 1) {
        throw Error(ErrorCode::RoutingInconsistency,
                    fmt::format("selection at device {} for target {} matched {} Bell pairs", holder, target,
                                candidates));
      }
      hop.success_probability = 1.0 - p_bottom;
      if (options.selection == SelectionMode::Oracle) {
        const auto next = tree.next_hop(holder, target);
        if (!next) {
          throw Error(ErrorCode::RoutingInconsistency,
                      fmt::format("target {} is not below device {} in its tree", target, holder));
        }
        const Label k = labels.label(*next);
        if (!dist.count({k})) {
          throw Error(ErrorCode::RoutingInconsistency,
                      fmt::format("routing registers at device {} never select {}", holder, *next));
        }
        selected = project_sites(s, {ancilla}, {k}, true).first;
        chosen = k;
      } else {
        Measurement m = measure_sites(s, {ancilla}, rng.next_u64());
        if (m.outcome[0] == labels.bottom()) continue;  // heralded miss: routing registers re-prepared
        selected = project_sites(s, {ancilla}, m.outcome, true).first;
        chosen = m.outcome[0];
      }
    }

    const DeviceId next = labels.device(*chosen);
    HopOutcome h = teleport_hop(selected, ledger, holder, next, bases, SelectionCondition{ancilla, *chosen},
                                rng.next_u64());
    if (!h.selected) {
      throw Error(ErrorCode::RoutingInconsistency, fmt::format("hop {} -> {} was not selected", holder, next));
    }
    std::vector<SiteId> drop{ancilla};
    if (local) {
      const auto own = local->layout.sites();
      drop.insert(drop.end(), own.begin(), own.end());
    }
    state = factor_out(h.state, drop).first;
    hop.receiver = next;
    hop.outcomes = std::move(h.outcomes);
    job.hops.push_back(std::move(hop));
    holder = next;
    if (job.hops.size() > topology.size()) {
      throw Error(ErrorCode::RoutingInconsistency, "route does not terminate");
    }
  }

  job.holder = holder;
  const auto tdist = outcome_distribution(state, {sites::carried("target", holder)});
  if (!tdist.count({t}) || std::abs(tdist.at({t}) - 1.0) > kNormTolerance) {
    throw Error(ErrorCode::RoutingInconsistency, "target-address register changed in transit");
  }
  const DenseMatrix rho = reduced_density_matrix(state, {sites::carried("payload", holder)});
  Amplitude f{};
  for (std::size_t i = 0; i < payload_dim; ++i) {
    for (std::size_t j = 0; j < payload_dim; ++j) f += std::conj(job.payload[i]) * rho(i, j) * job.payload[j];
  }
  job.fidelity = f.real();
  job.final_state = std::move(state);
  return job;
}

}  // namespace qnet
