// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances are fixed here and nowhere else.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "qnet/addressing.hpp"
#include "qnet/cli.hpp"
#include "qnet/equivalence.hpp"
#include "qnet/routing.hpp"
#include "qnet/scenarios.hpp"
#include "support/dense_oracle.hpp"

using namespace qnet;

namespace {

constexpr double kFidelityTol = 1e-9;     // fidelity >= 1 - kFidelityTol
constexpr double kProbabilityTol = 1e-9;  // selection probability vs branch weights
constexpr double kDenseTol = 1e-9;        // sparse vs dense, per amplitude / matrix entry
constexpr double kPerturbedCeiling = 0.99;

struct Verdict {
  bool pass = true;
  std::string detail;

  // Records the first failure only; later ones rarely add information.
  void fail(std::string why) {
    if (pass) detail = std::move(why);
    pass = false;
  }
};

std::string fixture(const std::string& name) { return std::string(QNET_FIXTURE_DIR) + "/" + name; }

// Labels for a routing layout from per-holder lists; unlisted slots get ⊥.
Labels routing_labels(const RoutingLayout& layout, const std::map<DeviceId, std::vector<DeviceId>>& lists) {
  const auto reg = layout.register_layout();
  Labels out(reg.size(), layout.labels().bottom());
  for (const auto& [holder, devices] : lists) {
    const auto group = layout.group(holder);
    if (devices.size() > group.size()) throw std::runtime_error("golden wider than the holder's group");
    for (std::size_t i = 0; i < devices.size(); ++i) out[reg.index_of(group[i])] = layout.labels().label(devices[i]);
  }
  return out;
}

SparseState golden(const RoutingLayout& layout, const std::vector<std::map<DeviceId, std::vector<DeviceId>>>& branches) {
  std::vector<std::pair<Amplitude, Labels>> terms;
  for (const auto& b : branches) terms.emplace_back(1.0, routing_labels(layout, b));
  return superpose(layout.register_layout(), terms);
}

Topology load(const std::string& name) { return load_figure_fixture(name).topology; }

// ---------------------------------------------------------------- 1

Verdict golden_routing_states() {
  Verdict v;
  const auto tree = build_mst(load("fig2"), 1);

  const auto local = build_local_routing_state(tree);
  const auto want_local = golden(local.layout, {{{1, {2, 3}}}, {{1, {7, 5, 4}}}, {{1, {7, 5, 6}}}});
  const double fl = fidelity(local.state, want_local);

  const auto simple = build_simplified_routing_state(tree);
  const auto want_simple = golden(simple.layout, {{{1, {2, 3}}}, {{1, {4, 5, 6, 7}}}});
  const double fs = fidelity(simple.state, want_simple);

  v.detail = fmt::format("local F={:.12f} simplified F={:.12f}", fl, fs);
  if (local.layout.slots_per_branch() != 3) v.fail("local state should use 3 registers");
  if (simple.layout.slots_per_branch() != 4) v.fail("simplified state should use 4 registers");
  if (fl < 1 - kFidelityTol || fs < 1 - kFidelityTol) v.fail(v.detail);
  return v;
}

// ---------------------------------------------------------------- 2

Verdict golden_mst_state() {
  Verdict v;
  const auto mst = build_distributed_mst_state(build_mst(load("fig3"), 1));
  const auto want = golden(mst.layout, {
                                           {{1, {2, 3}}, {2, {3}}},
                                           {{1, {4, 5, 6, 7, 8}}, {4, {5, 6, 7, 8}}, {5, {7}}},
                                           {{1, {4, 5, 6, 7, 8}}, {4, {5, 6, 7, 8}}, {5, {6, 8}}, {6, {8}}},
                                       });
  const double f = fidelity(mst.state, want);
  v.detail = fmt::format("F={:.12f} registers={}", f, mst.layout.slots_per_branch());
  if (f < 1 - kFidelityTol) v.fail(v.detail);
  return v;
}

// ---------------------------------------------------------------- 3

// Probability that the holder's selection picks `next`, from the MST state's
// own amplitudes: mass of branches whose holder group lists next's subtree,
// over the mass of branches that reach the holder at all.
double branch_weight_ratio(const RoutingState& mst, const SpanningTree& tree, DeviceId holder, DeviceId next) {
  const auto& reg = mst.state.layout();
  std::vector<std::size_t> idx;
  for (const auto& id : mst.layout.group(holder)) idx.push_back(reg.index_of(id));
  std::set<Label> toward;
  for (auto d : tree.subtree(next)) toward.insert(mst.layout.labels().label(d));
  const Label bottom = mst.layout.labels().bottom();
  double through = 0.0;
  double chosen = 0.0;
  for (const auto& [labels, amp] : mst.state.terms()) {
    std::set<Label> listed;
    for (auto i : idx) {
      if (labels[i] != bottom) listed.insert(labels[i]);
    }
    if (holder != tree.root() && listed.empty()) continue;
    through += std::norm(amp);
    if (listed == toward) chosen += std::norm(amp);
  }
  return chosen / through;
}

Verdict routing_end_to_end() {
  Verdict v;
  const Topology topo = load("fig3");
  CounterRng rng(2024);
  std::size_t pairs = 0;
  std::size_t routes = 0;
  double worst_f = 1.0;
  double worst_p = 0.0;
  for (auto s : topo.devices()) {
    const auto tree = build_mst(topo, s);
    const auto mst = build_distributed_mst_state(tree);
    for (auto t : topo.devices()) {
      if (s == t) continue;
      ++pairs;
      for (int k = 0; k < 20; ++k) {
        const std::size_t dim = k % 2 ? 4 : 2;
        std::vector<Amplitude> payload;
        for (std::size_t i = 0; i < dim; ++i) payload.emplace_back(2 * rng.uniform() - 1, 2 * rng.uniform() - 1);
        const auto job = route(topo, s, t, payload, {SelectionMode::Flag, RoutingMode::Distributed, rng.next_u64()});
        ++routes;
        worst_f = std::min(worst_f, job.fidelity);
        if (job.fidelity < 1 - kFidelityTol) v.fail(fmt::format("{}->{} F={:.12f}", s, t, job.fidelity));
        if (job.hops.size() != tree.distance(s, t)) {
          v.fail(fmt::format("{}->{} took {} hops, tree distance {}", s, t, job.hops.size(), tree.distance(s, t)));
        }
        if (job.holder != t) v.fail(fmt::format("{}->{} ended at {}", s, t, job.holder));
        for (const auto& hop : job.hops) {
          const double want = branch_weight_ratio(mst, tree, hop.sender, hop.receiver);
          const double gap = std::abs(hop.success_probability - want);
          worst_p = std::max(worst_p, gap);
          if (gap > kProbabilityTol) {
            v.fail(fmt::format("{}->{} hop {}->{} p={} want {}", s, t, hop.sender, hop.receiver,
                               hop.success_probability, want));
          }
        }
      }
    }
  }
  if (pairs != 56) v.fail(fmt::format("expected 56 ordered pairs, got {}", pairs));
  if (v.pass) v.detail = fmt::format("pairs={} routes={} min F={:.12f} max |dp|={:.3g}", pairs, routes, worst_f, worst_p);
  return v;
}

// ---------------------------------------------------------------- 4

Verdict selection_involution() {
  Verdict v;
  std::mt19937_64 gen(4);
  double worst = 1.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const DeviceId n = 1 + trial % 4;
    std::vector<DeviceId> devices(n);
    std::iota(devices.begin(), devices.end(), DeviceId{1});
    const auto book = trial % 3 == 2 && n > 1 ? AddressBook::cyclic(devices) : AddressBook::identity(devices);
    const Request req{{{1.0, 1, {}}}, Encoding::Classical};
    const NetworkUnderTest proto(book, req);
    const auto s = oracle::random_sparse(proto.state().layout(), 24, gen);
    auto net = NetworkUnderTest::from_state(book, req, s);
    const DeviceId d = std::uniform_int_distribution<DeviceId>(1, n)(gen);
    select_device(net, d);
    select_device(net, d);
    const double f = fidelity(net.state(), s);
    worst = std::min(worst, f);
    if (f < 1 - kFidelityTol) v.fail(fmt::format("trial {} F={:.12f}", trial, f));
  }
  if (v.pass) v.detail = fmt::format("states=1000 min F={:.12f}", worst);
  return v;
}

// ---------------------------------------------------------------- 5

SparseState without_op_registers(const SparseState& s, std::size_t slots) {
  std::vector<Site> keep;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < s.layout().size(); ++i) {
    if (s.layout()[i].id.rfind("req:op", 0) == 0) continue;
    keep.push_back(s.layout()[i]);
    idx.push_back(i);
  }
  if (keep.size() + slots != s.layout().size()) throw std::runtime_error("unexpected op register count");
  return remap_basis(s, RegisterLayout(keep), [&](const Labels& l) {
    Labels out;
    for (auto i : idx) out.push_back(l[i]);
    return out;
  });
}

Verdict encoding_equivalence() {
  Verdict v;
  std::vector<std::vector<OpCode>> programs{{}};
  for (Label a = 0; a < kCatalogSize; ++a) {
    programs.push_back({op_from_code(a)});
    for (Label b = 0; b < kCatalogSize; ++b) programs.push_back({op_from_code(a), op_from_code(b)});
  }
  std::mt19937_64 gen(5);
  std::size_t cases = 0;
  double worst = 1.0;
  auto check = [&](const AddressBook& book, std::vector<RequestTerm> terms) {
    const auto network = oracle::random_sparse(default_network_state(book).layout(), 4, gen);
    NetworkUnderTest classical(book, Request{terms, Encoding::Classical}, network);
    NetworkUnderTest quantum(book, Request{terms, Encoding::Quantum}, network);
    const auto c = process_request(classical);
    const auto q = process_request(quantum);
    const double f = fidelity(without_op_registers(q, quantum.request().slots()), c);
    worst = std::min(worst, f);
    ++cases;
    if (f < 1 - kFidelityTol) v.fail(fmt::format("n={} case {} F={:.12f}", book.device_count(), cases, f));
  };
  for (DeviceId n = 1; n <= 3; ++n) {
    std::vector<DeviceId> devices(n);
    std::iota(devices.begin(), devices.end(), DeviceId{1});
    std::vector<AddressBook> books{AddressBook::identity(devices)};
    if (n > 1) books.push_back(AddressBook::cyclic(devices));
    for (const auto& book : books) {
      for (Label t = 1; t <= n; ++t) {
        for (const auto& p : programs) check(book, {{1.0, t, p}});
      }
      if (n < 2) continue;
      for (const auto& p : programs) {
        for (const auto& q : programs) check(book, {{0.6, 1, p}, {Amplitude(0.0, 0.8), static_cast<Label>(n), q}});
      }
    }
  }
  if (v.pass) v.detail = fmt::format("programs={} cases={} min F={:.12f}", programs.size(), cases, worst);
  return v;
}

// ---------------------------------------------------------------- 6

Verdict task_equivalence() {
  Verdict v;
  const CounterRng root(6);
  double worst = 1.0;
  std::size_t entangled_count = 0;
  for (std::size_t trial = 0; trial < 100; ++trial) {
    CounterRng rng = root.derive(trial);
    const std::size_t n = 1 + trial % 3;
    const std::size_t m = 1 + (trial / 3) % n;
    const bool entangled = n > 1 && trial % 2 == 1;
    entangled_count += entangled;
    const auto inst = random_equivalence_instance(n, m, entangled, rng);
    const auto r = check_equivalence(inst.request, inst.book, inst.network);
    worst = std::min(worst, r.fidelity);
    if (r.fidelity < 1 - kFidelityTol || !r.all_match) {
      v.fail(fmt::format("trial {} (n={} m={}) F={:.12f}", trial, n, m, r.fidelity));
    }
  }
  if (v.pass) v.detail = fmt::format("instances=100 entangled={} min F={:.12f}", entangled_count, worst);
  return v;
}

// ---------------------------------------------------------------- 7

Verdict overlay() {
  Verdict v;
  const auto good = run_overlay_protocol(default_overlay_fixture());
  const std::vector<SiteId> work{sites::work(1), sites::work(2), sites::work(3)};
  const auto [addr, net] = factor_out(good.final_state, work);
  const double f_net = fidelity(net, default_overlay_fixture().target);
  // the address register keeps the weighted superposition of assignments
  const auto fx = default_overlay_fixture();
  std::vector<std::pair<Amplitude, Labels>> assignment_terms;
  for (std::size_t b = 0; b < fx.assignments.size(); ++b) {
    assignment_terms.emplace_back(fx.alphas[b], Labels(fx.assignments[b].begin(), fx.assignments[b].end()));
  }
  const double f_addr = fidelity(addr, superpose(addr.layout(), assignment_terms));
  const auto bad = run_overlay_protocol(perturbed_overlay_fixture());
  v.detail = fmt::format("F={:.12f} (network {:.12f}, address {:.12f}) perturbed F={:.12f} failing={}", good.fidelity,
                         f_net, f_addr, bad.fidelity, bad.failing.empty() ? 0 : bad.failing.front());
  if (good.fidelity < 1 - kFidelityTol || f_net < 1 - kFidelityTol || f_addr < 1 - kFidelityTol) v.fail(v.detail);
  if (bad.fidelity > kPerturbedCeiling || bad.failing != std::vector<std::size_t>{2}) v.fail(v.detail);
  return v;
}

// ---------------------------------------------------------------- 8

double max_gap(const oracle::Dense& a, const oracle::Dense& b) {
  if (a.ids != b.ids || a.dims != b.dims) return INFINITY;
  return (a.amps - b.amps).cwiseAbs().maxCoeff();
}

Eigen::MatrixXcd walsh(std::uint32_t dim) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Ones(1, 1);
  for (std::uint32_t d = 1; d < dim; d *= 2) {
    Eigen::MatrixXcd next(m.rows() * 2, m.cols() * 2);
    next << m, m, m, -m;
    m = next / std::sqrt(2.0);
  }
  return m;
}

Verdict sparse_vs_dense() {
  Verdict v;
  std::mt19937_64 gen(8);
  const std::vector<Label> dim_choices{2, 3, 4, 5, 8};
  double worst = 0.0;
  auto pick = [&](std::size_t bound) { return std::uniform_int_distribution<std::size_t>(0, bound - 1)(gen); };
  for (int c = 0; c < 500; ++c) {
    // sites 0 and 1 share a power-of-two dimension so xor_add always applies
    std::vector<Site> sites;
    std::uint64_t total = 0;
    do {
      sites.clear();
      const Label pow2 = std::vector<Label>{2, 4, 8}[pick(3)];
      sites.push_back({"s0", pow2});
      sites.push_back({"s1", pow2});
      const std::size_t extra = pick(4);
      for (std::size_t i = 0; i < extra; ++i) sites.push_back({fmt::format("s{}", i + 2), dim_choices[pick(5)]});
      total = 1;
      for (const auto& s : sites) total *= s.dim;
    } while (total > 4096);
    const RegisterLayout layout(sites);
    const std::size_t k = sites.size();
    const auto s = oracle::random_sparse(layout, 1 + pick(40), gen);
    const auto d = oracle::to_dense(s);
    const std::string a = sites[pick(k)].id;
    std::string b = sites[pick(k)].id;
    if (b == a) b = a == "s0" ? "s1" : "s0";
    double gap = 0.0;
    std::string what;
    switch (c % 10) {
      case 0: {
        what = "local unitary";
        const auto u = oracle::random_unitary(layout.dim(a), gen);
        gap = max_gap(oracle::to_dense(apply_gate(s, gates::matrix(a, oracle::to_library(u)))),
                      oracle::apply_local(d, {a}, u));
        break;
      }
      case 1: {
        what = "two-site unitary";
        const auto u = oracle::random_unitary(layout.dim(a) * layout.dim(b), gen);
        gap = max_gap(oracle::to_dense(apply_gate(s, LocalUnitary{{a, b}, oracle::to_library(u)})),
                      oracle::apply_local(d, {a, b}, u));
        break;
      }
      case 2: {
        what = "controlled unitary";
        const Label value = static_cast<Label>(pick(layout.dim(b)));
        const auto u = oracle::random_unitary(layout.dim(a), gen);
        gap = max_gap(oracle::to_dense(apply_controlled(s, {b}, {value}, gates::matrix(a, oracle::to_library(u)))),
                      oracle::apply_controlled_local(d, {b}, {value}, {a}, u));
        break;
      }
      case 3: {
        what = "xor_add";
        const Label dim = layout.dim("s0");
        const auto p = oracle::permutation_matrix({dim, dim}, [](const oracle::Digits& x) {
          return oracle::Digits{x[0], x[0] ^ x[1]};
        });
        gap = std::max(max_gap(oracle::to_dense(xor_add(s, "s0", "s1")), oracle::apply_local(d, {"s0", "s1"}, p)),
                       max_gap(oracle::to_dense(apply_gate(s, gates::xor_add("s0", "s1"))),
                               oracle::apply_local(d, {"s0", "s1"}, p)));
        break;
      }
      case 4: {
        what = "swap_values / xor_constant";
        const Label dim = layout.dim(a);
        const Label x = static_cast<Label>(pick(dim));
        const Label y = static_cast<Label>(pick(dim));
        const auto sw = oracle::permutation_matrix({dim}, [&](const oracle::Digits& q) {
          return oracle::Digits{q[0] == x ? y : q[0] == y ? x : q[0]};
        });
        gap = max_gap(oracle::to_dense(apply_gate(s, gates::swap_values(a, x, y))), oracle::apply_local(d, {a}, sw));
        const Label p2 = layout.dim("s0");
        const Label m = static_cast<Label>(pick(p2));
        const auto xc = oracle::permutation_matrix({p2}, [&](const oracle::Digits& q) { return oracle::Digits{q[0] ^ m}; });
        gap = std::max(gap, max_gap(oracle::to_dense(apply_gate(s, gates::xor_constant("s0", m))),
                                    oracle::apply_local(d, {"s0"}, xc)));
        break;
      }
      case 5: {
        what = "walsh_hadamard / parity_phase";
        const Label dim = layout.dim("s1");
        const Label mask = static_cast<Label>(pick(dim));
        Eigen::MatrixXcd phase = Eigen::MatrixXcd::Zero(dim, dim);
        for (Label q = 0; q < dim; ++q) phase(q, q) = std::popcount(q & mask) % 2 ? -1.0 : 1.0;
        const auto sparse = apply_gate(apply_gate(s, gates::walsh_hadamard("s1", dim)), gates::parity_phase("s1", dim, mask));
        gap = max_gap(oracle::to_dense(sparse), oracle::apply_local(oracle::apply_local(d, {"s1"}, walsh(dim)), {"s1"}, phase));
        break;
      }
      case 6: {
        what = "marginals and projection";
        const auto sparse = outcome_distribution(s, {a, b});
        const auto dense = oracle::marginal(d, {a, b});
        for (const auto& [key, p] : dense) {
          const auto it = sparse.find(Labels(key.begin(), key.end()));
          gap = std::max(gap, std::abs((it == sparse.end() ? 0.0 : it->second) - p));
        }
        gap = std::max(gap, sparse.size() > dense.size() ? 1.0 : 0.0);
        // project onto the most likely outcome, keeping the sites
        auto best = std::max_element(dense.begin(), dense.end(),
                                     [](const auto& x, const auto& y) { return x.second < y.second; });
        const Labels outcome(best->first.begin(), best->first.end());
        const auto [post, prob] = project_sites(s, {a, b}, outcome, true);
        oracle::Dense want = d;
        const std::size_t ia = d.index_of(a), ib = d.index_of(b);
        for (std::size_t i = 0; i < d.size(); ++i) {
          const auto digits = oracle::unflatten(d.dims, i);
          if (digits[ia] != outcome[0] || digits[ib] != outcome[1]) want.amps[static_cast<Eigen::Index>(i)] = 0.0;
        }
        want.amps /= want.amps.norm();
        gap = std::max({gap, std::abs(prob - best->second), max_gap(oracle::to_dense(post), want)});
        break;
      }
      case 7: {
        what = "merge_layouts / inner product";
        const RegisterLayout other({{"t0", 3}, {"t1", 2}});
        const auto o = oracle::random_sparse(other, 4, gen);
        const auto od = oracle::to_dense(o);
        oracle::Dense want;
        want.ids = d.ids;
        want.dims = d.dims;
        want.ids.insert(want.ids.end(), od.ids.begin(), od.ids.end());
        want.dims.insert(want.dims.end(), od.dims.begin(), od.dims.end());
        want.amps.resize(d.amps.size() * od.amps.size());
        for (Eigen::Index i = 0; i < d.amps.size(); ++i)
          want.amps.segment(i * od.amps.size(), od.amps.size()) = d.amps[i] * od.amps;
        gap = max_gap(oracle::to_dense(merge_layouts(s, o)), want);
        const auto s2 = oracle::random_sparse(layout, 1 + pick(40), gen);
        const auto d2 = oracle::to_dense(s2);
        gap = std::max({gap, std::abs(inner_product(s, s2) - d.amps.dot(d2.amps)),
                        std::abs(fidelity(s, s2) - oracle::fidelity(d, d2))});
        break;
      }
      case 8: {
        what = "reorder_sites";
        std::vector<SiteId> order;
        for (const auto& site : sites) order.push_back(site.id);
        std::shuffle(order.begin(), order.end(), gen);
        const auto sparse = reorder_sites(s, order);
        oracle::Dense want;
        std::vector<std::size_t> from;
        for (const auto& id : order) {
          from.push_back(d.index_of(id));
          want.ids.push_back(id);
          want.dims.push_back(d.dims[from.back()]);
        }
        want.amps = Eigen::VectorXcd::Zero(d.amps.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
          const auto digits = oracle::unflatten(d.dims, i);
          oracle::Digits moved;
          for (auto f : from) moved.push_back(digits[f]);
          want.amps[static_cast<Eigen::Index>(oracle::flatten(want.dims, moved))] = d.amps[static_cast<Eigen::Index>(i)];
        }
        gap = max_gap(oracle::to_dense(sparse), want);
        break;
      }
      default: {
        what = "reduced density matrix";
        const auto rho = reduced_density_matrix(s, {a, b});
        const auto want = oracle::partial_trace(d, {a, b});
        for (Eigen::Index r = 0; r < want.rows(); ++r)
          for (Eigen::Index col = 0; col < want.cols(); ++col)
            gap = std::max(gap, std::abs(rho(static_cast<std::size_t>(r), static_cast<std::size_t>(col)) - want(r, col)));
        break;
      }
    }
    worst = std::max(worst, gap);
    if (!(gap <= kDenseTol)) v.fail(fmt::format("case {} ({}) gap {:.3g}", c, what, gap));
  }
  if (v.pass) v.detail = fmt::format("cases=500 max gap={:.3g}", worst);
  return v;
}

// ---------------------------------------------------------------- 9

Verdict resource_counts() {
  Verdict v;
  BigCount fact = 1;
  for (std::size_t n = 1; n <= 12; ++n) {
    fact *= n;
    const auto cost = report_routing_cost(n);
    if (cost.single_mst_bound != fact || cost.unified_bound != fact * n) {
      v.fail(fmt::format("n={}: got ({}, {})", n, to_string(cost.single_mst_bound), to_string(cost.unified_bound)));
    }
  }
  if (report_routing_cost(12).single_mst_bound != 479001600) v.fail("12! mismatch");

  std::mt19937_64 gen(9);
  std::size_t trees = 0;
  std::size_t widest = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 7;
    std::set<DeviceId> devices;
    for (DeviceId d = 1; d <= n; ++d) devices.insert(d);
    std::set<Edge> edges;
    for (DeviceId d = 2; d <= n; ++d) edges.insert(Edge::between(d, std::uniform_int_distribution<DeviceId>(1, d - 1)(gen)));
    // a few cross links so the breadth-first trees differ per source
    for (int extra = 0; extra < trial % 3; ++extra) {
      const DeviceId x = std::uniform_int_distribution<DeviceId>(1, n)(gen);
      const DeviceId y = std::uniform_int_distribution<DeviceId>(1, n)(gen);
      if (x != y) edges.insert(Edge::between(x, y));
    }
    const Topology topo(devices, edges);
    const auto bound = report_routing_cost(n);
    for (auto s : topo.devices()) {
      const auto mst = build_distributed_mst_state(build_mst(topo, s));
      ++trees;
      widest = std::max(widest, mst.layout.slots_per_branch());
      if (mst.layout.slots_per_branch() > bound.single_mst_bound) {
        v.fail(fmt::format("n={} source {}: {} registers", n, s, mst.layout.slots_per_branch()));
      }
    }
    const auto report = report_routing_cost(topo);
    if (report.distributed_registers > bound.single_mst_bound || report.local_registers > bound.single_mst_bound ||
        report.unified_registers + report.unified_tags > bound.unified_bound) {
      v.fail(fmt::format("n={}: topology report exceeds the bound", n));
    }
  }
  if (v.pass) v.detail = fmt::format("exact n<=12, trees={} widest MST state={} registers", trees, widest);
  return v;
}

// ---------------------------------------------------------------- 10

Verdict determinism() {
  Verdict v;
  const std::vector<std::vector<std::string>> commands{
      {"mst", fixture("fig3.topo"), "--root", "4"},
      {"mst", fixture("fig2.topo"), "--dot"},
      {"routing-state", fixture("fig3.topo"), "--device", "1", "--mode", "distributed"},
      {"routing-state", fixture("fig2.topo"), "--mode", "unified", "--json"},
      {"route", fixture("fig3.topo"), "--source", "3", "--target", "8", "--seed", "17", "--payload", "0.6,0;0,0.8"},
      {"route", fixture("fig2.topo"), "--source", "1", "--target", "6", "--seed", "5", "--routing", "local"},
      {"request", fixture("chain3.topo"), fixture("x12.req"), "--encoding", "both", "--addresses", "cycle"},
      {"equivalence", "--devices", "3", "--trials", "20", "--seed", "99", "--jobs", "4"},
      {"overlay"},
      {"overlay", "--perturb", "--json"},
  };
  for (const auto& cmd : commands) {
    const auto first = qnet::cli::run(cmd);
    for (int rep = 0; rep < 3; ++rep) {
      const auto again = qnet::cli::run(cmd);
      if (again.out != first.out || again.err != first.err || again.exit_code != first.exit_code) {
        v.fail(fmt::format("'{}' differs on repeat", cmd.front()));
      }
    }
    if (first.out.empty()) v.fail(fmt::format("'{}' printed nothing", cmd.front()));
  }
  // thread count does not change the trial lines
  auto body = [](const std::string& out) { return out.substr(out.find("seed=")); };
  const auto one = qnet::cli::run({"equivalence", "--devices", "3", "--trials", "20", "--seed", "99", "--jobs", "1"});
  const auto four = qnet::cli::run({"equivalence", "--devices", "3", "--trials", "20", "--seed", "99", "--jobs", "4"});
  if (body(one.out) != body(four.out)) v.fail("--jobs changes the report");
  if (v.pass) v.detail = fmt::format("commands={} repeats=3", commands.size());
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"golden local and simplified routing states", golden_routing_states},
      {"golden MST state", golden_mst_state},
      {"routing end to end on all ordered pairs", routing_end_to_end},
      {"selection is an involution", selection_involution},
      {"classical and quantum encodings agree", encoding_equivalence},
      {"addresses equal superposed tasks", task_equivalence},
      {"overlay protocol and its negative control", overlay},
      {"sparse states agree with the dense oracle", sparse_vs_dense},
      {"routing resource counts", resource_counts},
      {"CLI determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.fail(fmt::format("exception: {}", e.what()));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << fmt::format("{} {:>2} {} ({}; {:.1f}s)\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                             v.detail, secs)
              << std::flush;
    failed += v.pass ? 0 : 1;
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed ? 1 : 0;
}
