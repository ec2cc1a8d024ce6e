#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace qnet {

using Amplitude = std::complex<double>;
using Label = std::uint32_t;
using Labels = std::vector<Label>;
using SiteId = std::string;

/// Amplitudes below this modulus are dropped after every operation.
inline constexpr double kPruneThreshold = 1e-12;
/// Allowed drift of the squared norm away from one.
inline constexpr double kNormTolerance = 1e-9;

struct Site {
  SiteId id;
  Label dim = 2;

  friend bool operator==(const Site&, const Site&) = default;
};

/// Ordered list of registers with heterogeneous dimensions. Site ids are
/// unique and every dimension is at least two.
class RegisterLayout {
 public:
  RegisterLayout() = default;
  explicit RegisterLayout(std::vector<Site> sites);

  std::size_t size() const noexcept { return sites_.size(); }
  bool empty() const noexcept { return sites_.empty(); }
  const Site& operator[](std::size_t i) const { return sites_[i]; }
  const std::vector<Site>& sites() const noexcept { return sites_; }

  /// Throws UnknownSite.
  std::size_t index_of(std::string_view id) const;
  std::optional<std::size_t> find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id).has_value(); }
  Label dim(std::string_view id) const { return sites_[index_of(id)].dim; }

  bool valid(const Labels& labels) const;
  /// Product of all dims, or nullopt when it does not fit in 64 bits.
  std::optional<std::uint64_t> total_dimension() const;

  /// Concatenation; throws SiteClash on a shared id.
  RegisterLayout concat(const RegisterLayout& other) const;

  friend bool operator==(const RegisterLayout& a, const RegisterLayout& b) {
    return a.sites_ == b.sites_;
  }

 private:
  std::vector<Site> sites_;
  std::map<SiteId, std::size_t, std::less<>> index_;
};

class SparseState;
namespace detail {
SparseState assemble(RegisterLayout layout, std::map<Labels, Amplitude> terms);
}

/// Pure state stored as a map from basis-label tuples to amplitudes.
/// Immutable: every operation returns a new state. The map is ordered, so
/// iteration order (and everything printed from it) is deterministic.
class SparseState {
 public:
  using TermMap = std::map<Labels, Amplitude>;

  /// The scalar state over an empty layout.
  SparseState();

  const RegisterLayout& layout() const noexcept { return layout_; }
  const TermMap& terms() const noexcept { return terms_; }
  std::size_t term_count() const noexcept { return terms_.size(); }
  Amplitude amplitude(const Labels& labels) const;
  double norm_squared() const;

 private:
  friend SparseState detail::assemble(RegisterLayout, TermMap);
  SparseState(RegisterLayout layout, TermMap terms);

  RegisterLayout layout_;
  TermMap terms_;
};

/// Row-major square complex matrix; only used for small local gates.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t dim) : dim_(dim), data_(dim * dim) {}
  DenseMatrix(std::size_t dim, std::vector<Amplitude> row_major);

  static DenseMatrix identity(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  Amplitude& operator()(std::size_t r, std::size_t c) { return data_[r * dim_ + c]; }
  Amplitude operator()(std::size_t r, std::size_t c) const { return data_[r * dim_ + c]; }

  DenseMatrix adjoint() const;
  DenseMatrix operator*(const DenseMatrix& rhs) const;
  bool is_unitary(double tol = kNormTolerance) const;

 private:
  std::size_t dim_ = 0;
  std::vector<Amplitude> data_;
};

/// Dense unitary over the listed target sites; the matrix dimension must equal
/// the product of their dims (first target is the most significant digit).
struct LocalUnitary {
  std::vector<SiteId> targets;
  DenseMatrix matrix;
};

/// Bijection on the label sub-tuple of the listed target sites.
struct BasisPermutation {
  std::vector<SiteId> targets;
  std::function<Labels(const Labels&)> map;
};

using GateSpec = std::variant<LocalUnitary, BasisPermutation>;

namespace gates {
GateSpec x(SiteId site);
GateSpec z(SiteId site);
GateSpec h(SiteId site);
GateSpec s(SiteId site);
GateSpec matrix(SiteId site, DenseMatrix m);
/// H applied bitwise on a register of dimension 2^k.
GateSpec walsh_hadamard(SiteId site, Label dim);
/// |x> -> |x xor value>.
GateSpec xor_constant(SiteId site, Label value);
/// |x> -> (-1)^popcount(x & mask) |x>.
GateSpec parity_phase(SiteId site, Label dim, Label mask);
/// Exchanges the basis values a and b, fixes everything else.
GateSpec swap_values(SiteId site, Label a, Label b);
/// |s>|d> -> |s>|d xor s>.
GateSpec xor_add(SiteId src, SiteId dst);
}  // namespace gates

SparseState make_basis_state(const RegisterLayout& layout, const Labels& labels);

/// Normalized superposition; coincident labels have their weights summed.
/// Throws ZeroState when nothing survives.
SparseState superpose(const RegisterLayout& layout,
                      const std::vector<std::pair<Amplitude, Labels>>& terms);

SparseState apply_gate(const SparseState& state, const GateSpec& gate);

/// Applies `gate` only on terms whose control sites carry `control_labels`.
SparseState apply_controlled(const SparseState& state,
                             const std::vector<SiteId>& control_sites,
                             const Labels& control_labels, const GateSpec& gate);

/// Generalized CNOT: label(dst) <- label(dst) xor label(src). Both dims must
/// be the same power of two.
SparseState xor_add(const SparseState& state, const SiteId& src, const SiteId& dst);

struct Measurement {
  Labels outcome;
  SparseState post_state;
  double probability = 0.0;
};

/// Marginal distribution of the listed sites, keyed by outcome tuple.
std::map<Labels, double> outcome_distribution(const SparseState& state,
                                              const std::vector<SiteId>& sites);

/// Projects onto `outcome` and renormalizes. The measured sites are removed
/// from the layout unless `keep_sites`. Throws ZeroState for impossible
/// outcomes.
std::pair<SparseState, double> project_sites(const SparseState& state,
                                             const std::vector<SiteId>& sites,
                                             const Labels& outcome,
                                             bool keep_sites = false);

/// Samples one outcome with the counter-based generator seeded by `seed`.
Measurement measure_sites(const SparseState& state, const std::vector<SiteId>& sites,
                          std::uint64_t seed);

/// |<a|b>|^2; layouts must be identical.
double fidelity(const SparseState& a, const SparseState& b);
Amplitude inner_product(const SparseState& a, const SparseState& b);

/// Tensor product a (x) b; layout is a's sites followed by b's.
SparseState merge_layouts(const SparseState& a, const SparseState& b);

/// Moves every term to `map(labels)` in `layout`. The map must be injective
/// on the stored terms (NotBijection otherwise).
SparseState remap_basis(const SparseState& state, const RegisterLayout& layout,
                        const std::function<Labels(const Labels&)>& map);

/// Same state with the layout reordered to `order` (a permutation of ids).
SparseState reorder_sites(const SparseState& state, const std::vector<SiteId>& order);

/// Splits a product state into (rest, factor over `sites`). Throws
/// NotSeparable when `sites` are entangled with the rest.
std::pair<SparseState, SparseState> factor_out(const SparseState& state,
                                               const std::vector<SiteId>& sites);

/// Reduced density matrix of `sites` (mixed-radix index, first site most
/// significant). Intended for a handful of small registers.
DenseMatrix reduced_density_matrix(const SparseState& state,
                                   const std::vector<SiteId>& sites);

}  // namespace qnet
