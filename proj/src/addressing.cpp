#include "qnet/addressing.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "qnet/error.hpp"

namespace qnet {

// ---------------------------------------------------------------- catalog

OpCode op_from_code(Label code) {
  if (code >= kCatalogSize) {
    throw Error(ErrorCode::UnknownOp, fmt::format("op code {} is not in the catalog", code));
  }
  return static_cast<OpCode>(code);
}

OpCode parse_op(std::string_view token) {
  static constexpr std::string_view kNames[] = {"I", "X", "Z", "H", "S"};
  for (Label i = 0; i < kCatalogSize; ++i) {
    if (token == kNames[i]) return static_cast<OpCode>(i);
  }
  Label code = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), code);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw Error(ErrorCode::UnknownOp, fmt::format("unknown op '{}'", token));
  }
  return op_from_code(code);
}

std::string_view op_name(OpCode op) {
  switch (op) {
    case OpCode::I: return "I";
    case OpCode::X: return "X";
    case OpCode::Z: return "Z";
    case OpCode::H: return "H";
    case OpCode::S: return "S";
  }
  return "?";
}

GateSpec catalog_gate(OpCode op, SiteId site) {
  switch (op) {
    case OpCode::I: return gates::matrix(std::move(site), DenseMatrix::identity(2));
    case OpCode::X: return gates::x(std::move(site));
    case OpCode::Z: return gates::z(std::move(site));
    case OpCode::H: return gates::h(std::move(site));
    case OpCode::S: return gates::s(std::move(site));
  }
  throw Error(ErrorCode::UnknownOp, "unknown op");
}

Label address_dimension(std::size_t device_count) {
  return std::bit_ceil(static_cast<Label>(device_count + 2));
}

namespace sites {
SiteId address(DeviceId d) { return fmt::format("addr:{}", d); }
SiteId work(DeviceId d) { return fmt::format("work:{}", d); }
SiteId request_address() { return "req:addr"; }
SiteId request_op(std::size_t slot) { return fmt::format("req:op{}", slot); }
}  // namespace sites

// ------------------------------------------------------------ address book

namespace {

void check_devices(const std::vector<DeviceId>& devices) {
  if (devices.empty()) {
    throw Error(ErrorCode::BadAssignment, "address book needs at least one device");
  }
  std::set<DeviceId> unique(devices.begin(), devices.end());
  if (unique.size() != devices.size() || unique.count(0)) {
    throw Error(ErrorCode::BadAssignment, "device list has duplicates or id 0");
  }
}

}  // namespace

AddressBook::AddressBook(std::vector<DeviceId> devices, ProductAddresses assignment)
    : devices_(std::move(devices)), addr_dim_(address_dimension(devices_.size())),
      assignment_(std::move(assignment)) {
  check_devices(devices_);
  const auto& map = std::get<ProductAddresses>(assignment_).address;
  if (map.size() != devices_.size()) {
    throw Error(ErrorCode::BadAssignment, "every device needs exactly one address");
  }
  for (auto d : devices_) {
    auto it = map.find(d);
    if (it == map.end()) {
      throw Error(ErrorCode::BadAssignment, fmt::format("device {} has no address", d));
    }
    if (it->second < 1 || it->second > devices_.size()) {
      throw Error(ErrorCode::BadAssignment,
                  fmt::format("address {} of device {} outside [1, {}]", it->second, d, devices_.size()));
    }
  }
}

AddressBook::AddressBook(std::vector<DeviceId> devices, EntangledAddresses assignment)
    : devices_(std::move(devices)), addr_dim_(address_dimension(devices_.size())),
      assignment_(std::move(assignment)) {
  check_devices(devices_);
  const auto& branches = std::get<EntangledAddresses>(assignment_).branches;
  if (branches.empty()) {
    throw Error(ErrorCode::BadAssignment, "entangled assignment has no branches");
  }
  std::set<AddressTuple> seen;
  for (const auto& [w, tuple] : branches) {
    if (std::abs(w) == 0.0) {
      throw Error(ErrorCode::BadAssignment, "entangled branch weight is zero");
    }
    AddressTuple sorted = tuple;
    std::sort(sorted.begin(), sorted.end());
    bool perm = sorted.size() == devices_.size();
    for (std::size_t i = 0; perm && i < sorted.size(); ++i) perm = sorted[i] == i + 1;
    if (!perm) {
      throw Error(ErrorCode::BadAssignment, "entangled branch is not a permutation of 1..n");
    }
    if (!seen.insert(tuple).second) {
      throw Error(ErrorCode::BadAssignment, "entangled branches repeat a permutation");
    }
  }
}

AddressBook AddressBook::identity(std::vector<DeviceId> devices) {
  std::sort(devices.begin(), devices.end());
  ProductAddresses p;
  for (std::size_t i = 0; i < devices.size(); ++i) p.address[devices[i]] = static_cast<Label>(i + 1);
  return AddressBook(std::move(devices), std::move(p));
}

AddressBook AddressBook::cyclic(std::vector<DeviceId> devices, std::vector<Amplitude> weights) {
  std::sort(devices.begin(), devices.end());
  const std::size_t n = devices.size();
  if (weights.empty()) weights.assign(n, 1.0);
  if (weights.size() != n) {
    throw Error(ErrorCode::BadAssignment, "cyclic book needs one weight per shift");
  }
  EntangledAddresses e;
  for (std::size_t shift = 0; shift < n; ++shift) {
    if (std::abs(weights[shift]) == 0.0) continue;
    AddressTuple t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<Label>((i + shift) % n + 1);
    e.branches.emplace_back(weights[shift], std::move(t));
  }
  return AddressBook(std::move(devices), std::move(e));
}

bool AddressBook::contains(DeviceId d) const {
  return std::find(devices_.begin(), devices_.end(), d) != devices_.end();
}

std::vector<std::pair<Amplitude, AddressTuple>> AddressBook::branches() const {
  if (const auto* p = std::get_if<ProductAddresses>(&assignment_)) {
    AddressTuple t;
    for (auto d : devices_) t.push_back(p->address.at(d));
    return {{Amplitude{1.0, 0.0}, std::move(t)}};
  }
  auto out = std::get<EntangledAddresses>(assignment_).branches;
  double norm = 0.0;
  for (const auto& [w, t] : out) norm += std::norm(w);
  for (auto& [w, t] : out) w /= std::sqrt(norm);
  return out;
}

SparseState build_address_state(const AddressBook& book) {
  std::vector<Site> layout;
  for (auto d : book.devices()) layout.push_back({sites::address(d), book.addr_dim()});
  std::vector<std::pair<Amplitude, Labels>> terms;
  for (const auto& [w, t] : book.branches()) terms.emplace_back(w, t);
  return superpose(RegisterLayout(std::move(layout)), terms);
}

// ----------------------------------------------------------------- request

std::size_t Request::slots() const {
  std::size_t k = 0;
  for (const auto& t : terms) k = std::max(k, t.program.size());
  return k;
}

SparseState build_request_state(const Request& request, std::size_t device_count) {
  const Label dim = address_dimension(device_count);
  std::set<Label> targets;
  for (const auto& t : request.terms) {
    if (t.target < 1 || t.target > device_count) {
      throw Error(ErrorCode::InvalidLabel,
                  fmt::format("target address {} outside [1, {}]", t.target, device_count));
    }
    if (!targets.insert(t.target).second) {
      throw Error(ErrorCode::DuplicateTarget, fmt::format("target address {} appears twice", t.target));
    }
  }
  std::vector<Site> layout{{sites::request_address(), dim}};
  const std::size_t k = request.encoding == Encoding::Quantum ? request.slots() : 0;
  for (std::size_t slot = 1; slot <= k; ++slot) layout.push_back({sites::request_op(slot), kCatalogSize});

  std::vector<std::pair<Amplitude, Labels>> terms;
  for (const auto& t : request.terms) {
    Labels l{t.target};
    for (std::size_t slot = 0; slot < k; ++slot) {
      l.push_back(slot < t.program.size() ? static_cast<Label>(t.program[slot]) : 0);
    }
    terms.emplace_back(t.weight, std::move(l));
  }
  return superpose(RegisterLayout(std::move(layout)), terms);
}

namespace {

std::vector<std::string_view> words_of(std::string_view line) {
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

Label parse_address(std::string_view w, std::size_t line) {
  Label v = 0;
  auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
  if (ec != std::errc() || ptr != w.data() + w.size() || v == 0) {
    throw Error(ErrorCode::Syntax, fmt::format("'{}' is not an address", w), line);
  }
  return v;
}

}  // namespace

Request parse_request(std::string_view text, Encoding encoding) {
  Request req;
  req.encoding = encoding;
  std::vector<std::pair<Label, double>> weights;
  std::vector<std::size_t> weight_lines;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto w = words_of(line);
    if (w.empty()) continue;
    if (w[0] == "target") {
      if (w.size() < 3 || w.size() > 4 || w[2] != "ops") {
        throw Error(ErrorCode::Syntax, "expected 'target <addr> ops <code[,code...]>'", line_no);
      }
      RequestTerm term;
      term.target = parse_address(w[1], line_no);
      for (const auto& t : req.terms) {
        if (t.target == term.target) {
          throw Error(ErrorCode::DuplicateTarget, fmt::format("target {} listed twice", term.target), line_no);
        }
      }
      if (w.size() == 4 && w[3] != "-") {
        std::string_view list = w[3];
        std::size_t p = 0;
        while (p <= list.size()) {
          const std::size_t comma = std::min(list.find(',', p), list.size());
          try {
            term.program.push_back(parse_op(list.substr(p, comma - p)));
          } catch (const Error& e) {
            throw Error(e.code(), e.detail(), line_no);
          }
          p = comma + 1;
        }
      }
      req.terms.push_back(std::move(term));
    } else if (w[0] == "weight") {
      if (w.size() != 3) throw Error(ErrorCode::Syntax, "expected 'weight <addr> <float>'", line_no);
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(w[2].data(), w[2].data() + w[2].size(), value);
      if (ec != std::errc() || ptr != w[2].data() + w[2].size() || !std::isfinite(value)) {
        throw Error(ErrorCode::Syntax, fmt::format("'{}' is not a weight", w[2]), line_no);
      }
      weights.emplace_back(parse_address(w[1], line_no), value);
      weight_lines.push_back(line_no);
    } else {
      throw Error(ErrorCode::Syntax, fmt::format("unknown directive '{}'", w[0]), line_no);
    }
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    auto it = std::find_if(req.terms.begin(), req.terms.end(),
                           [&](const RequestTerm& t) { return t.target == weights[i].first; });
    if (it == req.terms.end()) {
      throw Error(ErrorCode::Syntax, fmt::format("weight for address {} without a target line", weights[i].first),
                  weight_lines[i]);
    }
    it->weight = weights[i].second;
  }
  return req;
}

// ------------------------------------------------------------------ network

SparseState default_network_state(const AddressBook& book) {
  std::vector<Site> layout;
  for (auto d : book.devices()) layout.push_back({sites::work(d), 2});
  return make_basis_state(RegisterLayout(std::move(layout)), Labels(book.device_count(), 0));
}

NetworkUnderTest::NetworkUnderTest(AddressBook book, Request request,
                                   std::optional<SparseState> network_state)
    : book_(std::move(book)), request_(std::move(request)) {
  SparseState net = network_state ? std::move(*network_state) : default_network_state(book_);
  state_ = merge_layouts(merge_layouts(build_request_state(request_, book_.device_count()),
                                       build_address_state(book_)),
                         net);
  check_layout();
}

NetworkUnderTest::NetworkUnderTest(AddressBook book, Request request, SparseState global, int)
    : book_(std::move(book)), request_(std::move(request)), state_(std::move(global)) {
  check_layout();
}

NetworkUnderTest NetworkUnderTest::from_state(AddressBook book, Request request, SparseState global) {
  return NetworkUnderTest(std::move(book), std::move(request), std::move(global), 0);
}

void NetworkUnderTest::check_layout() const {
  const auto& l = state_.layout();
  auto expect = [&](const SiteId& id, Label dim) {
    auto idx = l.find(id);
    if (!idx) throw Error(ErrorCode::UnknownSite, fmt::format("global state lacks register '{}'", id));
    if (l[*idx].dim != dim) throw Error(ErrorCode::DimMismatch, fmt::format("register '{}' has the wrong dim", id));
  };
  expect(sites::request_address(), book_.addr_dim());
  if (request_.encoding == Encoding::Quantum) {
    for (std::size_t k = 1; k <= request_.slots(); ++k) expect(sites::request_op(k), kCatalogSize);
  }
  for (auto d : book_.devices()) {
    expect(sites::address(d), book_.addr_dim());
    expect(sites::work(d), 2);
  }
}

void NetworkUnderTest::set_state(SparseState s) {
  state_ = std::move(s);
  check_layout();
}

std::vector<SiteId> NetworkUnderTest::work_sites() const {
  std::vector<SiteId> out;
  for (auto d : book_.devices()) out.push_back(sites::work(d));
  return out;
}

namespace {

void require_device(const NetworkUnderTest& net, DeviceId d) {
  if (!net.book().contains(d)) {
    throw Error(ErrorCode::UnknownDevice, fmt::format("device {} is not in the address book", d));
  }
}

}  // namespace

void select_device(NetworkUnderTest& net, DeviceId device) {
  require_device(net, device);
  net.set_state(xor_add(net.state(), sites::request_address(), sites::address(device)));
}

void deselect_device(NetworkUnderTest& net, DeviceId device) { select_device(net, device); }

void apply_controlled_task_classical(NetworkUnderTest& net, DeviceId device, OpCode op) {
  require_device(net, device);
  net.set_state(apply_controlled(net.state(), {sites::address(device)}, {0},
                                 catalog_gate(op, sites::work(device))));
}

void apply_classical_program(NetworkUnderTest& net, DeviceId device) {
  require_device(net, device);
  SparseState s = net.state();
  for (const auto& term : net.request().terms) {
    for (auto op : term.program) {
      if (op == OpCode::I) continue;
      s = apply_controlled(s, {sites::address(device), sites::request_address()}, {0, term.target},
                           catalog_gate(op, sites::work(device)));
    }
  }
  net.set_state(std::move(s));
}

void apply_controlled_task_quantum(NetworkUnderTest& net, DeviceId device) {
  require_device(net, device);
  if (net.request().encoding != Encoding::Quantum) {
    throw Error(ErrorCode::InvalidArgument, "request carries no operation registers");
  }
  SparseState s = net.state();
  for (std::size_t slot = 1; slot <= net.request().slots(); ++slot) {
    for (Label code = 1; code < kCatalogSize; ++code) {
      s = apply_controlled(s, {sites::address(device), sites::request_op(slot)}, {0, code},
                           catalog_gate(op_from_code(code), sites::work(device)));
    }
  }
  net.set_state(std::move(s));
}

SparseState process_request(NetworkUnderTest& net, std::span<const DeviceId> order) {
  std::vector<DeviceId> sequence(order.begin(), order.end());
  if (sequence.empty()) {
    sequence = net.book().devices();
    std::sort(sequence.begin(), sequence.end());
  }
  std::vector<DeviceId> sorted_seq = sequence;
  std::vector<DeviceId> sorted_dev = net.book().devices();
  std::sort(sorted_seq.begin(), sorted_seq.end());
  std::sort(sorted_dev.begin(), sorted_dev.end());
  if (sorted_seq != sorted_dev) {
    throw Error(ErrorCode::InvalidArgument, "processing order must be a permutation of all devices");
  }
  for (auto d : sequence) {
    select_device(net, d);
    if (net.request().encoding == Encoding::Quantum) {
      apply_controlled_task_quantum(net, d);
    } else {
      apply_classical_program(net, d);
    }
    deselect_device(net, d);
  }
  return net.state();
}

}  // namespace qnet
