#include "qnet/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "qnet/error.hpp"

namespace qnet {

SiteId sites::task() { return "task"; }

Label TaskState::task_dim() const { return static_cast<Label>(std::max<std::size_t>(terms.size(), 2)); }

SparseState compose_overall_state(const Request& request, const AddressBook& book, const SparseState& network) {
  return merge_layouts(merge_layouts(build_request_state(request, book.device_count()), build_address_state(book)),
                       network);
}

TaskState derive_task_state(const Request& request, const AddressBook& book) {
  // validates targets and programs the same way the request register does
  build_request_state(request, book.device_count());
  double alpha_norm = 0.0;
  for (const auto& t : request.terms) alpha_norm += std::norm(t.weight);

  TaskState tasks;
  tasks.devices = book.devices();
  tasks.replication = book.device_count();
  const auto branches = book.branches();
  tasks.branch_count = branches.size();
  for (std::size_t i = 0; i < request.terms.size(); ++i) {
    const auto& term = request.terms[i];
    for (std::size_t j = 0; j < branches.size(); ++j) {
      tasks.terms.push_back({term.weight / std::sqrt(alpha_norm) * branches[j].first, i, j, term.target,
                             branches[j].second, term.program});
    }
  }
  return tasks;
}

SparseState process_via_task_state(const TaskState& tasks, const SparseState& network,
                                   std::span<const DeviceId> order) {
  std::vector<std::pair<Amplitude, Labels>> init;
  for (std::size_t k = 0; k < tasks.terms.size(); ++k) init.emplace_back(tasks.terms[k].gamma, Labels{static_cast<Label>(k)});
  SparseState state = merge_layouts(superpose(RegisterLayout({{sites::task(), tasks.task_dim()}}), init), network);

  std::vector<DeviceId> seq(order.begin(), order.end());
  if (seq.empty()) seq = tasks.devices;
  for (auto d : seq) {
    auto it = std::find(tasks.devices.begin(), tasks.devices.end(), d);
    if (it == tasks.devices.end()) throw Error(ErrorCode::UnknownDevice, fmt::format("device {} has no address", d));
    const auto pos = static_cast<std::size_t>(it - tasks.devices.begin());
    for (std::size_t k = 0; k < tasks.terms.size(); ++k) {
      const auto& term = tasks.terms[k];
      if (term.addresses[pos] != term.target) continue;
      for (auto op : term.program) {
        state = apply_controlled(state, {sites::task()}, {static_cast<Label>(k)}, catalog_gate(op, sites::work(d)));
      }
    }
  }
  return state;
}

namespace {

std::string program_text(const std::vector<OpCode>& program) {
  std::string s;
  for (std::size_t i = 0; i < program.size(); ++i) s += fmt::format("{}{}", i ? "," : "", op_name(program[i]));
  return s;
}

}  // namespace

EquivalenceResult check_equivalence(const Request& request, const AddressBook& book, const SparseState& network,
                                    std::span<const DeviceId> order) {
  const TaskState tasks = derive_task_state(request, book);
  const SparseState via_tasks = process_via_task_state(tasks, network, order);

  NetworkUnderTest net(book, request, network);
  const SparseState via_addresses = process_request(net, order);

  // (b_i, phi_i, a_j, network) -> (k, network)
  const std::size_t n = book.device_count();
  const std::size_t slots = request.encoding == Encoding::Quantum ? request.slots() : 0;
  const std::size_t head = 1 + slots + n;
  const auto branches = book.branches();
  const RegisterLayout& target_layout = via_tasks.layout();
  const SparseState relabeled = remap_basis(via_addresses, target_layout, [&](const Labels& l) {
    std::size_t i = 0;
    while (i < request.terms.size() && request.terms[i].target != l[0]) ++i;
    std::size_t j = 0;
    const auto addr = l.begin() + static_cast<std::ptrdiff_t>(1 + slots);
    while (j < branches.size() && !std::equal(branches[j].second.begin(), branches[j].second.end(), addr)) ++j;
    if (i == request.terms.size() || j == branches.size()) {
      throw Error(ErrorCode::NotBijection, "processed state left the request/address support");
    }
    Labels out{static_cast<Label>(tasks.index_of(i, j))};
    out.insert(out.end(), l.begin() + static_cast<std::ptrdiff_t>(head), l.end());
    return out;
  });

  EquivalenceResult result;
  result.fidelity = fidelity(relabeled, via_tasks);
  result.all_match = true;
  for (std::size_t k = 0; k < tasks.terms.size(); ++k) {
    // compare the unnormalized slices with task == k
    double diff = 0.0;
    for (const auto& [labels, amp] : relabeled.terms()) {
      if (labels[0] == k) diff += std::norm(amp - via_tasks.amplitude(labels));
    }
    for (const auto& [labels, amp] : via_tasks.terms()) {
      if (labels[0] == k && !relabeled.terms().count(labels)) diff += std::norm(amp);
    }
    const bool match = std::sqrt(diff) < 1e-9;
    result.all_match = result.all_match && match;
    const auto& t = tasks.terms[k];
    std::string addr;
    for (std::size_t d = 0; d < t.addresses.size(); ++d) addr += fmt::format("{}{}", d ? "," : "", t.addresses[d]);
    result.report += fmt::format("k={} addr=({};{}) program=({}) match={}\n", k, t.target, addr,
                                 program_text(t.program), match);
  }
  result.report += fmt::format("fidelity={:.12f}\n", result.fidelity);
  return result;
}

EquivalenceInstance random_equivalence_instance(std::size_t n, std::size_t m, bool entangled, CounterRng& rng) {
  if (n == 0 || m == 0 || m > n) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("need 1 <= m <= n, got n={} m={}", n, m));
  }
  auto below = [&](std::size_t bound) { return static_cast<std::size_t>(rng.uniform() * static_cast<double>(bound)); };
  auto amplitude = [&] { return Amplitude(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0); };

  std::vector<DeviceId> devices(n);
  std::iota(devices.begin(), devices.end(), DeviceId{1});

  std::vector<Label> targets(n);
  std::iota(targets.begin(), targets.end(), Label{1});
  for (std::size_t i = n; i > 1; --i) std::swap(targets[i - 1], targets[below(i)]);

  Request request{{}, Encoding::Quantum};
  for (std::size_t i = 0; i < m; ++i) {
    RequestTerm term{amplitude(), targets[i], {}};
    if (std::norm(term.weight) < 1e-3) term.weight = 1.0;
    const std::size_t len = below(4);
    for (std::size_t s = 0; s < len; ++s) term.program.push_back(op_from_code(static_cast<Label>(below(kCatalogSize))));
    request.terms.push_back(std::move(term));
  }

  std::optional<AddressBook> book;
  if (entangled) {
    std::vector<AddressTuple> perms;
    AddressTuple p(n);
    std::iota(p.begin(), p.end(), Label{1});
    do perms.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    for (std::size_t i = perms.size(); i > 1; --i) std::swap(perms[i - 1], perms[below(i)]);
    const std::size_t count = 1 + below(std::min<std::size_t>(perms.size(), 4));
    EntangledAddresses ea;
    for (std::size_t b = 0; b < count; ++b) {
      Amplitude w = amplitude();
      if (std::norm(w) < 1e-3) w = 1.0;
      ea.branches.emplace_back(w, perms[b]);
    }
    book.emplace(devices, std::move(ea));
  } else {
    AddressTuple p(n);
    std::iota(p.begin(), p.end(), Label{1});
    for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[below(i)]);
    ProductAddresses pa;
    for (std::size_t d = 0; d < n; ++d) pa.address[devices[d]] = p[d];
    book.emplace(devices, std::move(pa));
  }

  std::vector<Site> work;
  for (auto d : devices) work.push_back({sites::work(d), 2});
  const RegisterLayout wl(work);
  std::vector<std::pair<Amplitude, Labels>> terms;
  const std::size_t count = 1 + below(4);
  for (std::size_t t = 0; t < count; ++t) {
    Labels l;
    for (std::size_t d = 0; d < n; ++d) l.push_back(static_cast<Label>(below(2)));
    terms.emplace_back(amplitude(), std::move(l));
  }
  SparseState network = [&] {
    try {
      return superpose(wl, terms);
    } catch (const Error&) {
      return make_basis_state(wl, Labels(n, 0));
    }
  }();
  return {std::move(request), std::move(*book), std::move(network)};
}

}  // namespace qnet
