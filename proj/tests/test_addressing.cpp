#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "qnet/addressing.hpp"
#include "qnet/error.hpp"
#include "support/dense_oracle.hpp"
#include "support/protocol_oracle.hpp"

using namespace qnet;

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected qnet::Error");
  return ErrorCode::InvalidArgument;
}

std::vector<DeviceId> devices_upto(DeviceId n) {
  std::vector<DeviceId> d;
  for (DeviceId i = 1; i <= n; ++i) d.push_back(i);
  return d;
}

Request classical(std::vector<RequestTerm> terms) { return Request{std::move(terms), Encoding::Classical}; }
Request quantum(std::vector<RequestTerm> terms) { return Request{std::move(terms), Encoding::Quantum}; }

// Work-qubit labels per term, keyed by the address registers (branch).
Labels work_pattern(const SparseState& s, const Labels& key_prefix, const std::vector<SiteId>& key_sites,
                    const std::vector<SiteId>& work) {
  for (const auto& [labels, amp] : s.terms()) {
    bool match = true;
    for (std::size_t i = 0; i < key_sites.size(); ++i) {
      match = match && labels[s.layout().index_of(key_sites[i])] == key_prefix[i];
    }
    if (!match) continue;
    Labels w;
    for (const auto& id : work) w.push_back(labels[s.layout().index_of(id)]);
    return w;
  }
  return {};
}

}  // namespace

TEST_CASE("address dimension") {
  CHECK(address_dimension(1) == 4);
  CHECK(address_dimension(2) == 4);
  CHECK(address_dimension(3) == 8);
  CHECK(address_dimension(6) == 8);
  CHECK(address_dimension(7) == 16);
  CHECK(address_dimension(8) == 16);
}

TEST_CASE("op catalog") {
  CHECK(parse_op("H") == OpCode::H);
  CHECK(parse_op("4") == OpCode::S);
  CHECK(code_of([] { parse_op("T"); }) == ErrorCode::UnknownOp);
  CHECK(code_of([] { op_from_code(5); }) == ErrorCode::UnknownOp);
}

TEST_CASE("build_address_state") {
  const auto prod = build_address_state(AddressBook::identity({1, 2, 3}));
  CHECK(prod.terms() == SparseState::TermMap{{{1, 2, 3}, 1.0}});

  const auto cyc = build_address_state(AddressBook::cyclic({1, 2, 3}));
  CHECK(cyc.term_count() == 3);
  for (const Labels& l : {Labels{1, 2, 3}, Labels{2, 3, 1}, Labels{3, 1, 2}}) {
    CHECK(std::abs(cyc.amplitude(l) - 1.0 / std::sqrt(3.0)) < 1e-12);
  }

  const AddressBook weighted({1, 2}, EntangledAddresses{{{2.0, {1, 2}}, {1.0, {2, 1}}}});
  const auto w = build_address_state(weighted);
  CHECK(std::abs(w.amplitude({1, 2}) - 2.0 / std::sqrt(5.0)) < 1e-12);
  CHECK(std::abs(w.amplitude({2, 1}) - 1.0 / std::sqrt(5.0)) < 1e-12);

  CHECK(code_of([] { AddressBook({1, 2}, EntangledAddresses{{{1.0, {1, 1}}}}); }) == ErrorCode::BadAssignment);
  CHECK(code_of([] { AddressBook({1, 2}, EntangledAddresses{{{1.0, {1, 3}}}}); }) == ErrorCode::BadAssignment);
  CHECK(code_of([] { AddressBook({1, 2}, EntangledAddresses{{{0.0, {1, 2}}}}); }) == ErrorCode::BadAssignment);
  CHECK(code_of([] {
          AddressBook({1, 2}, EntangledAddresses{{{1.0, {1, 2}}, {1.0, {1, 2}}}});
        }) == ErrorCode::BadAssignment);
  CHECK(code_of([] { AddressBook({1, 2}, ProductAddresses{{{1, 1}, {2, 0}}}); }) == ErrorCode::BadAssignment);
}

TEST_CASE("build_request_state") {
  const auto c = build_request_state(classical({{1.0, 1, {}}, {1.0, 2, {}}}), 2);
  CHECK(c.layout().size() == 1);
  CHECK(std::abs(c.amplitude({1}) - kInvSqrt2) < 1e-12);
  CHECK(std::abs(c.amplitude({2}) - kInvSqrt2) < 1e-12);

  const auto q = build_request_state(
      quantum({{1.0, 1, {OpCode::X, OpCode::H}}, {1.0, 2, {OpCode::Z, OpCode::I}}}), 2);
  CHECK(q.layout().size() == 3);
  CHECK(q.term_count() == 2);
  CHECK(std::abs(q.amplitude({1, 1, 3}) - kInvSqrt2) < 1e-12);
  CHECK(std::abs(q.amplitude({2, 2, 0}) - kInvSqrt2) < 1e-12);

  const auto padded = build_request_state(quantum({{1.0, 1, {OpCode::X, OpCode::H}}, {1.0, 2, {OpCode::Z}}}), 2);
  CHECK(std::abs(padded.amplitude({2, 2, 0}) - kInvSqrt2) < 1e-12);

  CHECK(code_of([] { build_request_state(classical({{1.0, 1, {}}, {1.0, 1, {}}}), 2); }) ==
        ErrorCode::DuplicateTarget);
  CHECK(code_of([] { build_request_state(classical({{1.0, 3, {}}}), 2); }) == ErrorCode::InvalidLabel);
}

TEST_CASE("parse_request") {
  const auto r = parse_request("# two targets\ntarget 1 ops X,H\ntarget 2 ops 2\nweight 2 0.5\n",
                               Encoding::Quantum);
  REQUIRE(r.terms.size() == 2);
  CHECK(r.terms[0].program == std::vector<OpCode>{OpCode::X, OpCode::H});
  CHECK(r.terms[1].program == std::vector<OpCode>{OpCode::Z});
  CHECK(r.terms[1].weight == Amplitude(0.5));
  CHECK(r.terms[0].weight == Amplitude(1.0));
  CHECK(r.slots() == 2);

  CHECK(parse_request("target 1 ops\ntarget 2 ops -\n", Encoding::Classical).slots() == 0);

  try {
    parse_request("target 1 ops X\ntarget 2 ops Q\n", Encoding::Classical);
    FAIL("expected UnknownOp");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownOp);
    CHECK(e.line() == 2);
  }
  CHECK(code_of([] { parse_request("weight 3 1.0\ntarget 1 ops X\n", Encoding::Classical); }) ==
        ErrorCode::Syntax);
  CHECK(code_of([] { parse_request("target 1 X\n", Encoding::Classical); }) == ErrorCode::Syntax);
  CHECK(code_of([] { parse_request("target 1 ops X\ntarget 1 ops Z\n", Encoding::Classical); }) ==
        ErrorCode::DuplicateTarget);
}

TEST_CASE("select_device") {
  NetworkUnderTest net(AddressBook::identity({1, 2}), classical({{1.0, 1, {}}, {1.0, 2, {}}}));
  const SparseState before = net.state();
  select_device(net, 1);
  // layout: req, addr:1, addr:2, work:1, work:2
  const SparseState& s = net.state();
  CHECK(s.term_count() == 2);
  CHECK(std::abs(s.amplitude({1, 0, 2, 0, 0}) - kInvSqrt2) < 1e-12);
  CHECK(std::abs(s.amplitude({2, 3, 2, 0, 0}) - kInvSqrt2) < 1e-12);

  select_device(net, 1);
  CHECK(fidelity(net.state(), before) == doctest::Approx(1.0));

  NetworkUnderTest single(AddressBook::identity({1, 2}), classical({{1.0, 2, {}}}));
  select_device(single, 2);
  const auto dist = outcome_distribution(single.state(), {sites::address(2)});
  CHECK(dist.at({0}) == doctest::Approx(1.0));

  CHECK(code_of([&] { select_device(net, 7); }) == ErrorCode::UnknownDevice);
}

TEST_CASE("deselect_device mechanics and dense agreement") {
  NetworkUnderTest net(AddressBook::identity({1, 2}), classical({{1.0, 2, {}}}));
  deselect_device(net, 1);
  // without a prior select the register reads b xor a = 2 xor 1
  CHECK(net.state().amplitude({2, 3, 2, 0, 0}) == Amplitude(1.0));

  std::mt19937_64 gen(31);
  for (DeviceId n = 1; n <= 3; ++n) {
    const auto book = AddressBook::identity(devices_upto(n));
    const Request req = classical({{1.0, 1, {}}});
    const NetworkUnderTest proto(book, req);
    for (int trial = 0; trial < 10; ++trial) {
      const auto s = oracle::random_sparse(proto.state().layout(), 12, gen);
      auto net2 = NetworkUnderTest::from_state(book, req, s);
      const DeviceId dev = std::uniform_int_distribution<DeviceId>(1, n)(gen);
      select_device(net2, dev);
      const Label d = book.addr_dim();
      const auto cnot = oracle::permutation_matrix({d, d}, [](const oracle::Digits& x) {
        return oracle::Digits{x[0], x[0] ^ x[1]};
      });
      const auto dense = oracle::apply_local(oracle::to_dense(s), {sites::request_address(), sites::address(dev)}, cnot);
      CHECK(oracle::fidelity(dense, oracle::to_dense(net2.state())) == doctest::Approx(1.0).epsilon(1e-9));
      deselect_device(net2, dev);
      CHECK(fidelity(net2.state(), s) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("apply_controlled_task_classical") {
  {
    NetworkUnderTest net(AddressBook::identity({1, 2}), classical({{1.0, 1, {}}}));
    select_device(net, 1);
    apply_controlled_task_classical(net, 1, OpCode::X);
    deselect_device(net, 1);
    CHECK(net.state().amplitude({1, 1, 2, 1, 0}) == Amplitude(1.0));
  }
  {
    NetworkUnderTest net(AddressBook::identity({1, 2}), classical({{1.0, 2, {}}}));
    const auto before = net.state();
    select_device(net, 1);
    apply_controlled_task_classical(net, 1, OpCode::X);
    deselect_device(net, 1);
    CHECK(net.state().terms() == before.terms());
  }
  {
    NetworkUnderTest net(AddressBook::identity({1, 2}), classical({{1.0, 1, {}}, {1.0, 2, {}}}));
    select_device(net, 1);
    apply_controlled_task_classical(net, 1, OpCode::X);
    deselect_device(net, 1);
    const SparseState& s = net.state();
    CHECK(s.term_count() == 2);
    CHECK(std::abs(s.amplitude({1, 1, 2, 1, 0}) - kInvSqrt2) < 1e-12);
    CHECK(std::abs(s.amplitude({2, 1, 2, 0, 0}) - kInvSqrt2) < 1e-12);
  }
  NetworkUnderTest net(AddressBook::identity({1}), classical({{1.0, 1, {}}}));
  CHECK(code_of([&] { apply_controlled_task_classical(net, 1, op_from_code(9)); }) == ErrorCode::UnknownOp);
}

TEST_CASE("apply_controlled_task_quantum") {
  const auto book = AddressBook::identity({1, 2});
  {
    NetworkUnderTest q(book, quantum({{1.0, 1, {OpCode::X}}}));
    NetworkUnderTest c(book, classical({{1.0, 1, {}}}));
    select_device(q, 1);
    apply_controlled_task_quantum(q, 1);
    deselect_device(q, 1);
    select_device(c, 1);
    apply_controlled_task_classical(c, 1, OpCode::X);
    deselect_device(c, 1);
    // drop the (basis-valued) op register before comparing
    auto [rest, ops] = factor_out(q.state(), {sites::request_op(1)});
    CHECK(fidelity(rest, c.state()) == doctest::Approx(1.0).epsilon(1e-12));
  }
  {
    NetworkUnderTest q(book, quantum({{1.0, 1, {OpCode::I, OpCode::I}}, {1.0, 2, {OpCode::I}}}));
    const auto before = q.state();
    for (DeviceId d : {1u, 2u}) {
      select_device(q, d);
      apply_controlled_task_quantum(q, d);
      deselect_device(q, d);
    }
    CHECK(fidelity(q.state(), before) == doctest::Approx(1.0));
  }
  {
    // m = 2: (X,H) for address 1 and (Z,I) for address 2 against the
    // product of the projector-controlled matrices, applied densely.
    const Request req = quantum({{1.0, 1, {OpCode::X, OpCode::H}}, {1.0, 2, {OpCode::Z, OpCode::I}}});
    NetworkUnderTest q(book, req);
    auto dense = oracle::to_dense(q.state());
    process_request(q);
    const Label d = book.addr_dim();
    const auto cnot = oracle::permutation_matrix({d, d}, [](const oracle::Digits& x) {
      return oracle::Digits{x[0], x[0] ^ x[1]};
    });
    for (DeviceId dev : {1u, 2u}) {
      dense = oracle::apply_local(dense, {sites::request_address(), sites::address(dev)}, cnot);
      for (std::size_t slot = 1; slot <= 2; ++slot) {
        for (std::uint32_t code = 0; code < kCatalogSize; ++code) {
          dense = oracle::apply_controlled_local(dense, {sites::address(dev), sites::request_op(slot)}, {0, code},
                                                 {sites::work(dev)}, oracle::catalog(static_cast<int>(code)));
        }
      }
      dense = oracle::apply_local(dense, {sites::request_address(), sites::address(dev)}, cnot);
    }
    CHECK(oracle::fidelity(dense, oracle::to_dense(q.state())) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("process_request examples") {
  {
    const auto book = AddressBook::identity({1, 2, 3});
    const Request req = classical({{1.0, 1, {OpCode::X}}, {1.0, 2, {OpCode::X}}});
    NetworkUnderTest net(book, req);
    const auto init = net.state();
    const auto out = process_request(net);
    const auto expect = oracle::expected_after_request(book, req, default_network_state(book), init);
    CHECK(oracle::fidelity(expect, oracle::to_dense(out)) == doctest::Approx(1.0).epsilon(1e-9));
    // request |1> flips work 1, request |2> flips work 2
    const std::vector<SiteId> work{sites::work(1), sites::work(2), sites::work(3)};
    CHECK(work_pattern(out, {1}, {sites::request_address()}, work) == Labels{1, 0, 0});
    CHECK(work_pattern(out, {2}, {sites::request_address()}, work) == Labels{0, 1, 0});
    // address and request registers are restored
    CHECK(outcome_distribution(out, {sites::address(1), sites::address(2), sites::address(3)}).at({1, 2, 3}) ==
          doctest::Approx(1.0));
  }
  {
    const auto book = AddressBook::identity({1, 2, 3});
    NetworkUnderTest net(book, classical({{1.0, 1, {}}, {1.0, 3, {}}}));
    const auto before = net.state();
    CHECK(fidelity(process_request(net), before) == doctest::Approx(1.0));
  }
  {
    // entangled 3-cycle addresses: X for address 1 lands on a different
    // physical device in each branch
    const auto book = AddressBook::cyclic({1, 2, 3});
    const Request req = classical({{1.0, 1, {OpCode::X}}});
    NetworkUnderTest net(book, req);
    const auto init = net.state();
    const auto out = process_request(net);
    const std::vector<SiteId> addr{sites::address(1), sites::address(2), sites::address(3)};
    const std::vector<SiteId> work{sites::work(1), sites::work(2), sites::work(3)};
    CHECK(work_pattern(out, {1, 2, 3}, addr, work) == Labels{1, 0, 0});
    CHECK(work_pattern(out, {2, 3, 1}, addr, work) == Labels{0, 0, 1});
    CHECK(work_pattern(out, {3, 1, 2}, addr, work) == Labels{0, 1, 0});
    const auto expect = oracle::expected_after_request(book, req, default_network_state(book), init);
    CHECK(oracle::fidelity(expect, oracle::to_dense(out)) == doctest::Approx(1.0).epsilon(1e-9));
  }
  {
    NetworkUnderTest net(AddressBook::identity({1, 2}), classical({{1.0, 1, {}}}));
    const std::vector<DeviceId> bad{1, 1};
    CHECK(code_of([&] { process_request(net, bad); }) == ErrorCode::InvalidArgument);
  }
}

TEST_CASE("process_request agrees with the closed form on random inputs") {
  std::mt19937_64 gen(77);
  std::uniform_int_distribution<Label> op(0, kCatalogSize - 1);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 60; ++trial) {
    const DeviceId n = std::uniform_int_distribution<DeviceId>(1, 3)(gen);
    const auto devices = devices_upto(n);
    std::vector<Amplitude> w;
    for (DeviceId i = 0; i < n; ++i) w.emplace_back(nd(gen), nd(gen));
    const auto book = trial % 2 ? AddressBook::cyclic(devices, w) : AddressBook::identity(devices);
    std::vector<Label> targets;
    for (Label t = 1; t <= n; ++t) targets.push_back(t);
    std::shuffle(targets.begin(), targets.end(), gen);
    const std::size_t m = std::uniform_int_distribution<std::size_t>(1, n)(gen);
    Request req{{}, trial % 3 ? Encoding::Quantum : Encoding::Classical};
    for (std::size_t i = 0; i < m; ++i) {
      RequestTerm t{Amplitude(nd(gen), nd(gen)), targets[i], {}};
      const std::size_t len = std::uniform_int_distribution<std::size_t>(0, 3)(gen);
      for (std::size_t k = 0; k < len; ++k) t.program.push_back(op_from_code(op(gen)));
      req.terms.push_back(t);
    }
    const auto network = oracle::random_sparse(default_network_state(book).layout(), 4, gen);
    NetworkUnderTest net(book, req, network);
    const auto init = net.state();
    std::vector<DeviceId> order = devices;
    std::shuffle(order.begin(), order.end(), gen);
    const auto out = process_request(net, order);
    const auto expect = oracle::expected_after_request(book, req, network, init);
    CHECK(oracle::fidelity(expect, oracle::to_dense(out)) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("identity re-run after a real run changes nothing") {
  const auto book = AddressBook::cyclic({1, 2, 3});
  NetworkUnderTest net(book, classical({{1.0, 1, {OpCode::H, OpCode::S}}, {1.0, 3, {OpCode::X}}}));
  const auto after = process_request(net);
  // classical programs live in the request table, so the same registers can
  // be driven again with identity programs
  NetworkUnderTest again = NetworkUnderTest::from_state(
      book, classical({{1.0, 1, {OpCode::I, OpCode::I}}, {1.0, 3, {}}}), after);
  CHECK(fidelity(process_request(again), after) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("order independence over all permutations") {
  for (DeviceId n = 1; n <= 3; ++n) {
    const auto devices = devices_upto(n);
    for (bool entangled : {false, true}) {
      const auto book = entangled ? AddressBook::cyclic(devices) : AddressBook::identity(devices);
      Request req{{}, Encoding::Quantum};
      for (Label t = 1; t <= n; ++t) req.terms.push_back({1.0, t, {OpCode::H, op_from_code(t % kCatalogSize)}});
      std::vector<DeviceId> order = devices;
      std::optional<SparseState> first;
      do {
        NetworkUnderTest net(book, req);
        const auto out = process_request(net, order);
        if (!first) first = out;
        CHECK(fidelity(*first, out) == doctest::Approx(1.0).epsilon(1e-12));
      } while (std::next_permutation(order.begin(), order.end()));
    }
  }
}
