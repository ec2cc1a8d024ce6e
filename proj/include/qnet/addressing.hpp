#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "qnet/statevec.hpp"
#include "qnet/topology.hpp"

namespace qnet {

/// Fixed single-qubit gate catalog acting on a device's work qubit.
enum class OpCode : Label { I = 0, X = 1, Z = 2, H = 3, S = 4 };
inline constexpr Label kCatalogSize = 5;

/// Accepts a numeric code ("3") or a mnemonic ("H"); throws UnknownOp.
OpCode parse_op(std::string_view token);
OpCode op_from_code(Label code);
std::string_view op_name(OpCode op);
GateSpec catalog_gate(OpCode op, SiteId site);

/// Smallest power of two >= n + 2: value 0 marks a match after XOR, values
/// 1..n are addresses, n + 1 is the filler value.
Label address_dimension(std::size_t device_count);

namespace sites {
SiteId address(DeviceId d);
SiteId work(DeviceId d);
SiteId request_address();
/// Operation register for program slot `slot` (1-based).
SiteId request_op(std::size_t slot);
}  // namespace sites

using AddressTuple = std::vector<Label>;

/// Each device owns one fixed address.
struct ProductAddresses {
  std::map<DeviceId, Label> address;
};

/// Weighted superposition of address assignments; each tuple lists the
/// address of every device in book order and must be a permutation of 1..n.
struct EntangledAddresses {
  std::vector<std::pair<Amplitude, AddressTuple>> branches;
};

class AddressBook {
 public:
  AddressBook(std::vector<DeviceId> devices, ProductAddresses assignment);
  AddressBook(std::vector<DeviceId> devices, EntangledAddresses assignment);

  /// Device of rank r (ascending) gets address r + 1.
  static AddressBook identity(std::vector<DeviceId> devices);
  /// The n cyclic shifts of the identity assignment, uniform unless weighted.
  static AddressBook cyclic(std::vector<DeviceId> devices, std::vector<Amplitude> weights = {});

  std::size_t device_count() const noexcept { return devices_.size(); }
  Label addr_dim() const noexcept { return addr_dim_; }
  const std::vector<DeviceId>& devices() const noexcept { return devices_; }
  bool contains(DeviceId d) const;
  bool entangled() const noexcept { return std::holds_alternative<EntangledAddresses>(assignment_); }

  /// Normalized address branches; a product book has exactly one.
  std::vector<std::pair<Amplitude, AddressTuple>> branches() const;

 private:
  std::vector<DeviceId> devices_;
  Label addr_dim_;
  std::variant<ProductAddresses, EntangledAddresses> assignment_;
};

SparseState build_address_state(const AddressBook& book);

enum class Encoding { Classical, Quantum };

struct RequestTerm {
  Amplitude weight{1.0, 0.0};
  Label target = 0;
  std::vector<OpCode> program;
};

struct Request {
  std::vector<RequestTerm> terms;
  Encoding encoding = Encoding::Classical;

  /// Program slots K: the longest program.
  std::size_t slots() const;
};

/// Classical: sum_i beta_i |b_i>. Quantum: sum_i beta_i |b_i>|phi_i1..phi_iK>,
/// shorter programs padded with the identity code.
SparseState build_request_state(const Request& request, std::size_t device_count);

/// Lines `target <addr> ops <code[,code...]>` and `weight <addr> <float>`.
Request parse_request(std::string_view text, Encoding encoding);

/// Request, address and network registers of one protocol run. Single
/// writer: every operation below mutates the held global state in place.
class NetworkUnderTest {
 public:
  /// Global state |psi_R>|psi_A>|psi_N>; the network state defaults to all
  /// work qubits in |0>.
  NetworkUnderTest(AddressBook book, Request request,
                   std::optional<SparseState> network_state = std::nullopt);

  /// Adopts an arbitrary global state that carries every required register.
  static NetworkUnderTest from_state(AddressBook book, Request request, SparseState global);

  const SparseState& state() const noexcept { return state_; }
  void set_state(SparseState s);
  const AddressBook& book() const noexcept { return book_; }
  const Request& request() const noexcept { return request_; }
  std::vector<SiteId> work_sites() const;

 private:
  NetworkUnderTest(AddressBook book, Request request, SparseState global, int);
  void check_layout() const;

  AddressBook book_;
  Request request_;
  SparseState state_;
};

SparseState default_network_state(const AddressBook& book);

/// XOR of the request address into the device's address register.
void select_device(NetworkUnderTest& net, DeviceId device);
void deselect_device(NetworkUnderTest& net, DeviceId device);

/// Catalog gate on the device's work qubit wherever its address register
/// reads 0.
void apply_controlled_task_classical(NetworkUnderTest& net, DeviceId device, OpCode op);

/// Classically communicated program table: for every request term, its
/// program runs on the device's work qubit wherever the device is selected
/// and the request register holds that term's target.
void apply_classical_program(NetworkUnderTest& net, DeviceId device);

/// For each slot k and catalog code j: U_j on the work qubit wherever the
/// device is selected and op register k holds j.
void apply_controlled_task_quantum(NetworkUnderTest& net, DeviceId device);

/// select -> task -> deselect for each device in `order` (ascending ids when
/// empty). Returns the final global state.
SparseState process_request(NetworkUnderTest& net, std::span<const DeviceId> order = {});

}  // namespace qnet
