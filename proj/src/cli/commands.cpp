#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "qnet/addressing.hpp"
#include "qnet/cli.hpp"
#include "qnet/equivalence.hpp"
#include "qnet/error.hpp"
#include "qnet/routing.hpp"
#include "qnet/scenarios.hpp"
#include "qnet/topology.hpp"

namespace qnet::cli {

namespace {

// Input problems exit 2; everything else raised while a protocol runs exits 1.
int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::RoutingInconsistency:
    case ErrorCode::ResourceConsumed:
    case ErrorCode::NotSeparable:
    case ErrorCode::NotBijection:
    case ErrorCode::NotUnitary:
    case ErrorCode::LayoutMismatch:
    case ErrorCode::SiteClash:
    case ErrorCode::DimMismatch:
      return kExitProtocol;
    default:
      return kExitUsage;
  }
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError(fmt::format("cannot read '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Topology load_topology(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return parse_topology(text);
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("{}: {}", path, e.detail()), e.line());
  }
}

std::vector<DeviceId> parse_id_list(const std::string& text, const char* what) {
  std::vector<DeviceId> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      const unsigned long v = std::stoul(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(static_cast<DeviceId>(v));
    } catch (const std::exception&) {
      throw UsageError(fmt::format("bad {} entry '{}'", what, tok));
    }
  }
  return out;
}

std::string amp_text(Amplitude a) { return format_real(a.real()) + "," + format_real(a.imag()); }

std::string joined(const std::vector<std::string>& parts, const char* sep = ",") {
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? sep : "") + parts[i];
  return s;
}

template <typename T>
std::string joined_numbers(const std::vector<T>& v) {
  std::vector<std::string> parts;
  for (const auto& x : v) parts.push_back(std::to_string(x));
  return joined(parts);
}

std::string program_text(const std::vector<OpCode>& program) {
  std::vector<std::string> parts;
  for (auto op : program) parts.emplace_back(op_name(op));
  return program.empty() ? "-" : joined(parts);
}

struct MstArgs {
  std::string topology;
  DeviceId root = 1;
  bool dot = false;
};

struct RoutingStateArgs {
  std::string topology;
  DeviceId device = 1;
  std::string mode = "local";
};

struct RouteArgs {
  std::string topology;
  DeviceId source = 0;
  DeviceId target = 0;
  std::string payload = "1,0;0,0";
  std::uint64_t seed = 0;
  std::string mode = "flag";
  std::string routing = "distributed";
};

struct RequestArgs {
  std::string topology;
  std::string request;
  std::string encoding = "classical";
  std::string order;
  std::string addresses = "identity";
};

struct EquivalenceArgs {
  std::size_t devices = 3;
  std::optional<std::size_t> terms;
  std::uint64_t seed = 0;
  std::size_t trials = 100;
  std::string addresses = "mixed";
  std::size_t jobs = 1;
};

struct OverlayArgs {
  bool perturb = false;
  std::string alphas;
};

int cmd_mst(const MstArgs& a, Report& report, std::string& out) {
  const Topology topo = load_topology(a.topology);
  const SpanningTree tree = build_mst(topo, a.root);
  if (a.dot) {
    out = to_dot(topo, &tree);
    return kExitOk;
  }
  report.add("devices", std::to_string(topo.size()));
  report.add("root", std::to_string(tree.root()));
  const auto tree_edges = tree.edges();
  for (const auto& e : tree_edges) {
    const DeviceId parent = tree.parent(e.a) == e.b ? e.b : e.a;
    const DeviceId child = parent == e.a ? e.b : e.a;
    report.add("tree.edge", fmt::format("{}->{}", parent, child));
  }
  for (const auto& e : topo.edges()) {
    if (!tree_edges.count(e)) report.add("cross.edge", fmt::format("{}-{}", e.a, e.b));
  }
  for (auto d : tree.devices()) {
    report.add(fmt::format("device.{}", d), fmt::format("depth={} children={}", tree.depth(d),
                                                        tree.is_leaf(d) ? "-" : joined_numbers(tree.children(d))));
  }
  return kExitOk;
}

int cmd_routing_state(const RoutingStateArgs& a, Report& report) {
  const Topology topo = load_topology(a.topology);
  std::optional<RoutingState> r;
  if (a.mode == "local") {
    r = build_local_routing_state(build_mst(topo, a.device));
  } else if (a.mode == "simplified") {
    r = build_simplified_routing_state(build_mst(topo, a.device));
  } else if (a.mode == "distributed") {
    r = build_distributed_mst_state(build_mst(topo, a.device));
  } else {
    std::vector<SpanningTree> trees;
    for (auto d : topo.devices()) trees.push_back(build_mst(topo, d));
    r = build_unified_routing_state(trees);
  }
  const auto bound = report_routing_cost(topo.size());
  report.add("kind", std::string(to_string(r->layout.kind())));
  if (a.mode != "unified") report.add("device", std::to_string(a.device));
  report.add("registers", std::to_string(r->layout.slots_per_branch()));
  report.add("register_dim", std::to_string(r->layout.labels().dim()));
  report.add("branches", std::to_string(r->layout.branch_count()));
  report.add("terms", std::to_string(r->state.term_count()));
  report.add("bound.single_mst", to_string(bound.single_mst_bound));
  report.add("bound.unified", to_string(bound.unified_bound));
  std::istringstream dump(r->layout.dump());
  for (std::string line; std::getline(dump, line);) report.raw(line);
  return kExitOk;
}

int cmd_route(const RouteArgs& a, Report& report) {
  const Topology topo = load_topology(a.topology);
  const auto payload = parse_payload(a.payload);
  RouteOptions opt;
  opt.seed = a.seed;
  opt.selection = a.mode == "oracle" ? SelectionMode::Oracle : SelectionMode::Flag;
  opt.routing = a.routing == "local" ? RoutingMode::Local : RoutingMode::Distributed;
  report.add("source", std::to_string(a.source));
  report.add("target", std::to_string(a.target));
  report.add("routing", a.routing);
  report.add("selection", a.mode);
  const TeleportJob job = route(topo, a.source, a.target, payload, opt);
  for (std::size_t i = 0; i < job.hops.size(); ++i) {
    const auto& h = job.hops[i];
    std::vector<std::string> outcomes;
    for (const auto& o : h.outcomes) {
      outcomes.push_back(fmt::format("{}:z={},m={}", o.base, o.z, o.m));
    }
    report.add(fmt::format("hop.{}", i + 1),
               fmt::format("{}->{} attempts={} p_select={} {}", h.sender, h.receiver, h.attempts,
                           format_real(h.success_probability), joined(outcomes, " ")));
  }
  report.add("hops", std::to_string(job.hops.size()));
  report.add("tree_distance", std::to_string(build_mst(topo, a.source).distance(a.source, a.target)));
  report.add("holder", std::to_string(job.holder));
  report.add("fidelity", format_real(job.fidelity));
  if (job.fidelity < 1.0 - 1e-9) {
    report.set_status("degraded");
    return kExitProtocol;
  }
  return kExitOk;
}

// Quantum-encoded final state without the op registers (they are a function
// of the request address), for comparison with the classical run.
SparseState drop_op_registers(const SparseState& s, std::size_t slots) {
  if (slots == 0) return s;
  std::vector<Site> keep;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < s.layout().size(); ++i) {
    if (i >= 1 && i <= slots) continue;
    keep.push_back(s.layout()[i]);
    idx.push_back(i);
  }
  return remap_basis(s, RegisterLayout(keep), [&](const Labels& l) {
    Labels out;
    for (auto i : idx) out.push_back(l[i]);
    return out;
  });
}

void report_final_state(Report& report, const std::string& prefix, const SparseState& s) {
  std::size_t i = 0;
  for (const auto& [labels, amp] : s.terms()) {
    std::vector<std::string> parts;
    for (std::size_t k = 0; k < labels.size(); ++k) parts.push_back(fmt::format("{}={}", s.layout()[k].id, labels[k]));
    report.add(fmt::format("{}.{}", prefix, i++), fmt::format("amp={} {}", amp_text(amp), joined(parts, " ")));
  }
}

int cmd_request(const RequestArgs& a, Report& report) {
  const Topology topo = load_topology(a.topology);
  const std::string text = read_file(a.request);
  const std::vector<DeviceId> devices(topo.devices().begin(), topo.devices().end());
  const AddressBook book = a.addresses == "cycle" ? AddressBook::cyclic(devices) : AddressBook::identity(devices);
  std::vector<DeviceId> order = a.order.empty() ? devices : parse_id_list(a.order, "order");

  const bool both = a.encoding == "both";
  const Encoding primary = a.encoding == "quantum" ? Encoding::Quantum : Encoding::Classical;
  const Request req = parse_request(text, primary);
  report.add("devices", std::to_string(devices.size()));
  report.add("addresses", a.addresses);
  report.add("encoding", a.encoding);
  report.add("order", joined_numbers(order));
  report.add("terms", std::to_string(req.terms.size()));
  for (std::size_t i = 0; i < req.terms.size(); ++i) {
    const auto& t = req.terms[i];
    report.add(fmt::format("term.{}", i + 1),
               fmt::format("target={} weight={} program={}", t.target, amp_text(t.weight), program_text(t.program)));
  }
  if (req.terms.empty()) {
    // nothing requested: the network is left as it is
    report.add("fidelity_to_initial", format_real(1.0));
    return kExitOk;
  }

  auto run_encoding = [&](Encoding enc) {
    NetworkUnderTest net(book, Request{req.terms, enc});
    const SparseState initial = net.state();
    const SparseState final_state = process_request(net, order);
    return std::pair{initial, final_state};
  };
  const auto [initial, final_state] = run_encoding(primary);
  report_final_state(report, "final", final_state);
  // address registers must come back unchanged
  std::vector<SiteId> addr;
  for (auto d : devices) addr.push_back(sites::address(d));
  const auto before = outcome_distribution(initial, addr);
  const auto after = outcome_distribution(final_state, addr);
  bool intact = before.size() == after.size();
  for (const auto& [k, p] : before) intact = intact && after.count(k) && std::abs(after.at(k) - p) < 1e-9;
  report.add("addresses_intact", intact ? "true" : "false");
  report.add("fidelity_to_initial", format_real(fidelity(initial, final_state)));
  if (both) {
    const auto [qi, quantum_final] = run_encoding(Encoding::Quantum);
    const auto [ci, classical_final] = run_encoding(Encoding::Classical);
    const double f = fidelity(drop_op_registers(quantum_final, req.slots()), classical_final);
    report.add("cross_encoding_fidelity", format_real(f));
    if (f < 1.0 - 1e-9) {
      report.set_status("mismatch");
      return kExitProtocol;
    }
  }
  if (!intact) {
    report.set_status("mismatch");
    return kExitProtocol;
  }
  return kExitOk;
}

int cmd_equivalence(const EquivalenceArgs& a, Report& report) {
  if (a.devices == 0) throw UsageError("--devices must be at least 1");
  const std::size_t m = a.terms.value_or(std::min<std::size_t>(2, a.devices));
  if (m == 0 || m > a.devices) throw UsageError(fmt::format("--terms must be in 1..{}", a.devices));
  report.add("devices", std::to_string(a.devices));
  report.add("terms", std::to_string(m));
  report.add("addresses", a.addresses);
  report.add("trials", std::to_string(a.trials));

  struct Outcome {
    std::string line;
    double fidelity = 0.0;
    bool ok = false;
    std::string error;
  };
  std::vector<Outcome> results(a.trials);
  const CounterRng root(a.seed);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t t = first; t < a.trials; t += stride) {
      try {
        CounterRng rng = root.derive(t);
        const bool entangled = a.addresses == "entangled" || (a.addresses == "mixed" && t % 2 == 1);
        const auto inst = random_equivalence_instance(a.devices, m, entangled, rng);
        const auto r = check_equivalence(inst.request, inst.book, inst.network);
        results[t].fidelity = r.fidelity;
        results[t].ok = r.fidelity >= 1.0 - 1e-9 && r.all_match;
        results[t].line = fmt::format("addresses={} branches={} tasks={} fidelity={} match={}",
                                      entangled ? "entangled" : "product", inst.book.branches().size(),
                                      m * inst.book.branches().size(), format_real(r.fidelity), r.all_match);
      } catch (const std::exception& e) {
        results[t].error = e.what();
      }
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(a.jobs, std::max<std::size_t>(a.trials, 1)));
  if (jobs == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(work, j, jobs);
    for (auto& th : pool) th.join();
  }

  double min_f = 1.0;
  std::size_t failed = 0;
  for (std::size_t t = 0; t < a.trials; ++t) {
    if (!results[t].error.empty()) throw std::runtime_error(fmt::format("trial {}: {}", t, results[t].error));
    report.add(fmt::format("trial.{}", t), results[t].line);
    min_f = std::min(min_f, results[t].fidelity);
    failed += results[t].ok ? 0 : 1;
  }
  if (a.trials > 0) report.add("min_fidelity", format_real(min_f));
  report.add("failed", std::to_string(failed));
  if (failed) {
    report.set_status("mismatch");
    return kExitProtocol;
  }
  return kExitOk;
}

int cmd_overlay(const OverlayArgs& a, Report& report) {
  OverlayFixture f = a.perturb ? perturbed_overlay_fixture() : default_overlay_fixture();
  if (!a.alphas.empty()) {
    std::vector<Amplitude> alphas;
    std::stringstream ss(a.alphas);
    for (std::string tok; std::getline(ss, tok, ',');) {
      try {
        std::size_t used = 0;
        alphas.emplace_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw UsageError(fmt::format("bad --alphas entry '{}'", tok));
      }
    }
    f.alphas = alphas;
  }
  report.add("fixture", a.perturb ? "perturbed" : "default");
  const OverlayResult r = run_overlay_protocol(f);
  for (const auto& b : r.branches) {
    report.add(fmt::format("branch.{}", b.branch),
               fmt::format("addresses=({}) alpha={} program={} fidelity={}", joined_numbers(b.addresses),
                           amp_text(f.alphas[b.branch - 1]), to_string(f.programs[b.branch - 1]),
                           format_real(b.fidelity)));
  }
  report.add("fidelity", format_real(r.fidelity));
  if (!r.failing.empty()) {
    report.add("failing_branches", joined_numbers(r.failing));
    report.set_status("mismatch");
    return kExitProtocol;
  }
  return r.fidelity >= 1.0 - 1e-9 ? kExitOk : kExitProtocol;
}

}  // namespace

CommandResult run(const std::vector<std::string>& args) {
  CommandResult result;
  CLI::App app{"Desk-scale simulator for addressing, routing and teleportation in entanglement-based networks",
               "qnetsim"};
  app.require_subcommand(1);
  app.fallthrough();
  bool json = false;
  app.add_flag("--json", json, "Emit the report as JSON");

  MstArgs mst;
  auto* c_mst = app.add_subcommand("mst", "Spanning tree of a topology (BFS, ascending-id tie-break)");
  c_mst->add_option("topology", mst.topology, "Topology file")->required();
  c_mst->add_option("--root", mst.root, "Root device");
  c_mst->add_flag("--dot", mst.dot, "Print Graphviz DOT instead of a report");

  RoutingStateArgs rs;
  auto* c_rs = app.add_subcommand("routing-state", "Build and dump a routing state");
  c_rs->add_option("topology", rs.topology, "Topology file")->required();
  c_rs->add_option("--device", rs.device, "Owner (local, simplified) or source (distributed)");
  c_rs->add_option("--mode", rs.mode, "Routing state kind")
      ->check(CLI::IsMember({"local", "simplified", "distributed", "unified"}));

  RouteArgs ra;
  auto* c_route = app.add_subcommand("route", "Route a payload by controlled teleportation");
  c_route->add_option("topology", ra.topology, "Topology file")->required();
  c_route->add_option("--source", ra.source, "Source device")->required();
  c_route->add_option("--target", ra.target, "Target device")->required();
  c_route->add_option("--payload", ra.payload, "Amplitudes as re,im;re,im;...");
  c_route->add_option("--seed", ra.seed, "Seed for all measurements");
  c_route->add_option("--mode", ra.mode, "Selection: measure the ancilla (flag) or use the tree (oracle)")
      ->check(CLI::IsMember({"flag", "oracle"}));
  c_route->add_option("--routing", ra.routing, "Routing state family")
      ->check(CLI::IsMember({"local", "distributed"}));

  RequestArgs rq;
  auto* c_req = app.add_subcommand("request", "Process a request file over the network's devices");
  c_req->add_option("topology", rq.topology, "Topology file")->required();
  c_req->add_option("request", rq.request, "Request file")->required();
  c_req->add_option("--encoding", rq.encoding, "Operation encoding")
      ->check(CLI::IsMember({"classical", "quantum", "both"}));
  c_req->add_option("--order", rq.order, "Device visiting order, comma separated");
  c_req->add_option("--addresses", rq.addresses, "Address state")->check(CLI::IsMember({"identity", "cycle"}));

  EquivalenceArgs eq;
  auto* c_eq = app.add_subcommand("equivalence", "Compare address-driven and task-state-driven processing");
  c_eq->add_option("--devices", eq.devices, "Number of devices");
  c_eq->add_option("--terms", eq.terms, "Request terms (default min(2, devices))");
  c_eq->add_option("--seed", eq.seed, "Root seed; trial t uses a derived stream");
  c_eq->add_option("--trials", eq.trials, "Number of random instances");
  c_eq->add_option("--addresses", eq.addresses, "Address states to draw")
      ->check(CLI::IsMember({"product", "entangled", "mixed"}));
  c_eq->add_option("--jobs", eq.jobs, "Worker threads");

  OverlayArgs ov;
  auto* c_ov = app.add_subcommand("overlay", "Drive three overlaid network states to a common state");
  c_ov->add_flag("--perturb", ov.perturb, "Break the second branch's program");
  c_ov->add_option("--alphas", ov.alphas, "Branch weights, comma separated");

  std::ostringstream out, err;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    result.out = out.str();
    result.err = err.str();
    result.exit_code = code == 0 ? kExitOk : kExitUsage;
    return result;
  }

  std::optional<std::uint64_t> seed;
  if (c_route->parsed()) seed = ra.seed;
  if (c_eq->parsed()) seed = eq.seed;
  Report report(args, seed);
  std::string direct;
  int code = kExitOk;
  try {
    if (c_mst->parsed()) code = cmd_mst(mst, report, direct);
    if (c_rs->parsed()) code = cmd_routing_state(rs, report);
    if (c_route->parsed()) code = cmd_route(ra, report);
    if (c_req->parsed()) code = cmd_request(rq, report);
    if (c_eq->parsed()) code = cmd_equivalence(eq, report);
    if (c_ov->parsed()) code = cmd_overlay(ov, report);
  } catch (const Error& e) {
    result.err = fmt::format("qnetsim: error: {}\n", e.what());
    result.exit_code = exit_code_for(e.code());
    return result;
  } catch (const UsageError& e) {
    result.err = fmt::format("qnetsim: error: {}\n", e.what());
    result.exit_code = kExitUsage;
    return result;
  } catch (const std::exception& e) {
    result.err = fmt::format("qnetsim: error: {}\n", e.what());
    result.exit_code = kExitProtocol;
    return result;
  }
  result.out = !direct.empty() ? direct : (json ? report.json() : report.text());
  result.exit_code = code;
  return result;
}

}  // namespace qnet::cli
