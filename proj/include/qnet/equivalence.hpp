#pragma once

#include <span>
#include <string>
#include <vector>

#include "qnet/addressing.hpp"
#include "qnet/rng.hpp"
#include "qnet/statevec.hpp"

namespace qnet {

namespace sites {
SiteId task();
}  // namespace sites

/// One superposed task: request term i paired with address branch j.
struct TaskTerm {
  Amplitude gamma;
  std::size_t request_index = 0;
  std::size_t branch_index = 0;
  Label target = 0;
  AddressTuple addresses;
  std::vector<OpCode> program;
};

/// Terms are indexed by k = i * branch_count + j. The n-fold replication of
/// each task label is kept as a count: every device reads the same value.
struct TaskState {
  std::vector<TaskTerm> terms;
  std::vector<DeviceId> devices;
  std::size_t branch_count = 0;
  std::size_t replication = 0;

  std::size_t index_of(std::size_t request_index, std::size_t branch_index) const {
    return request_index * branch_count + branch_index;
  }
  /// Dimension of the task register (at least 2).
  Label task_dim() const;
};

/// Request (x) address (x) network.
SparseState compose_overall_state(const Request& request, const AddressBook& book, const SparseState& network);

TaskState derive_task_state(const Request& request, const AddressBook& book);

/// sum_k gamma_k |k>_task (x) network, then for every device and task k whose
/// target equals that device's address in t_k, the program runs on the
/// device's work qubit controlled on task == k.
SparseState process_via_task_state(const TaskState& tasks, const SparseState& network,
                                   std::span<const DeviceId> order = {});

struct EquivalenceResult {
  double fidelity = 0.0;
  /// `k=<idx> addr=(<target>;<a1,...>) program=(...) match=<bool>` per task,
  /// then `fidelity=<value>`.
  std::string report;
  bool all_match = false;
};

/// Runs request processing on the composed state and task-state processing
/// on the derived tasks, relabels the former by (i, j) -> k and compares.
EquivalenceResult check_equivalence(const Request& request, const AddressBook& book, const SparseState& network,
                                    std::span<const DeviceId> order = {});

struct EquivalenceInstance {
  Request request;
  AddressBook book;
  SparseState network;
};

/// Random quantum-encoded instance over devices 1..n with m <= n distinct
/// targets, programs of length 0..3 and a random work-qubit state.
EquivalenceInstance random_equivalence_instance(std::size_t n, std::size_t m, bool entangled, CounterRng& rng);

}  // namespace qnet
