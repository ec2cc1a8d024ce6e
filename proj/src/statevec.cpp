#include "qnet/statevec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <set>

#include "qnet/error.hpp"
#include "qnet/rng.hpp"

namespace qnet {

namespace {

using TermMap = SparseState::TermMap;

void prune(TermMap& terms) {
  std::erase_if(terms, [](const auto& kv) { return std::abs(kv.second) < kPruneThreshold; });
}

double norm_of(const TermMap& terms) {
  double total = 0.0;
  for (const auto& [labels, amp] : terms) {
    total += std::norm(amp);
  }
  return total;
}

void check_norm(const TermMap& terms, const char* where) {
  const double n = norm_of(terms);
  if (std::abs(n - 1.0) > kNormTolerance) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(where) + ": norm drifted to " + std::to_string(n));
  }
}

std::vector<std::size_t> resolve(const RegisterLayout& layout, const std::vector<SiteId>& ids) {
  std::vector<std::size_t> idx;
  idx.reserve(ids.size());
  for (const auto& id : ids) {
    idx.push_back(layout.index_of(id));
  }
  std::vector<std::size_t> sorted = idx;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorCode::SiteClash, "site listed twice");
  }
  return idx;
}

Labels pick(const Labels& labels, const std::vector<std::size_t>& idx) {
  Labels out;
  out.reserve(idx.size());
  for (auto i : idx) {
    out.push_back(labels[i]);
  }
  return out;
}

const std::vector<SiteId>& targets_of(const GateSpec& gate) {
  return std::visit([](const auto& g) -> const std::vector<SiteId>& { return g.targets; }, gate);
}

bool is_power_of_two(Label v) { return v >= 2 && std::has_single_bit(v); }

// Applies the gate to every term of `terms`; the result is not pruned.
TermMap apply_to_terms(const RegisterLayout& layout, const TermMap& terms,
                       const GateSpec& gate) {
  const auto idx = resolve(layout, targets_of(gate));
  TermMap out;

  if (const auto* u = std::get_if<LocalUnitary>(&gate)) {
    std::size_t sub_dim = 1;
    for (auto i : idx) {
      sub_dim *= layout[i].dim;
    }
    if (sub_dim != u->matrix.dim()) {
      throw Error(ErrorCode::DimMismatch, "matrix dimension " + std::to_string(u->matrix.dim()) +
                                              " does not match target dimension " +
                                              std::to_string(sub_dim));
    }
    if (!u->matrix.is_unitary()) {
      throw Error(ErrorCode::NotUnitary, "local gate is not unitary");
    }
    for (const auto& [labels, amp] : terms) {
      std::size_t col = 0;
      for (auto i : idx) {
        col = col * layout[i].dim + labels[i];
      }
      Labels next = labels;
      for (std::size_t row = 0; row < sub_dim; ++row) {
        const Amplitude m = u->matrix(row, col);
        if (m == Amplitude{}) {
          continue;
        }
        std::size_t rem = row;
        for (std::size_t k = idx.size(); k-- > 0;) {
          next[idx[k]] = static_cast<Label>(rem % layout[idx[k]].dim);
          rem /= layout[idx[k]].dim;
        }
        out[next] += amp * m;
      }
    }
    return out;
  }

  const auto& perm = std::get<BasisPermutation>(gate);
  std::uint64_t sub_dim = 1;
  for (auto i : idx) {
    sub_dim *= layout[i].dim;
  }
  auto checked = [&](const Labels& in) {
    Labels res = perm.map(in);
    if (res.size() != idx.size()) {
      throw Error(ErrorCode::NotBijection, "permutation changed the tuple width");
    }
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (res[k] >= layout[idx[k]].dim) {
        throw Error(ErrorCode::NotBijection, "permutation left the register range");
      }
    }
    return res;
  };
  if (sub_dim <= (1u << 16)) {
    // full check on the target subspace
    std::set<Labels> seen;
    Labels cur(idx.size(), 0);
    for (std::uint64_t n = 0; n < sub_dim; ++n) {
      std::uint64_t rem = n;
      for (std::size_t k = idx.size(); k-- > 0;) {
        cur[k] = static_cast<Label>(rem % layout[idx[k]].dim);
        rem /= layout[idx[k]].dim;
      }
      if (!seen.insert(checked(cur)).second) {
        throw Error(ErrorCode::NotBijection, "basis permutation is not injective");
      }
    }
  }
  for (const auto& [labels, amp] : terms) {
    const Labels res = checked(pick(labels, idx));
    Labels next = labels;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      next[idx[k]] = res[k];
    }
    auto [it, inserted] = out.emplace(std::move(next), amp);
    if (!inserted) {
      throw Error(ErrorCode::NotBijection, "basis permutation collided on stored terms");
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- layout

RegisterLayout::RegisterLayout(std::vector<Site> sites) : sites_(std::move(sites)) {
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    if (sites_[i].dim < 2) {
      throw Error(ErrorCode::InvalidArgument, "site '" + sites_[i].id + "' has dim < 2");
    }
    if (!index_.emplace(sites_[i].id, i).second) {
      throw Error(ErrorCode::SiteClash, "duplicate site id '" + sites_[i].id + "'");
    }
  }
}

std::size_t RegisterLayout::index_of(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw Error(ErrorCode::UnknownSite, "no site '" + std::string(id) + "'");
  }
  return it->second;
}

std::optional<std::size_t> RegisterLayout::find(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    return std::nullopt;
  }
  return it->second;
}

bool RegisterLayout::valid(const Labels& labels) const {
  if (labels.size() != sites_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= sites_[i].dim) {
      return false;
    }
  }
  return true;
}

std::optional<std::uint64_t> RegisterLayout::total_dimension() const {
  std::uint64_t total = 1;
  for (const auto& s : sites_) {
    if (total > UINT64_MAX / s.dim) {
      return std::nullopt;
    }
    total *= s.dim;
  }
  return total;
}

RegisterLayout RegisterLayout::concat(const RegisterLayout& other) const {
  std::vector<Site> all = sites_;
  all.insert(all.end(), other.sites_.begin(), other.sites_.end());
  return RegisterLayout(std::move(all));
}

// ----------------------------------------------------------------- state

SparseState::SparseState() : terms_{{Labels{}, Amplitude{1.0, 0.0}}} {}

SparseState::SparseState(RegisterLayout layout, TermMap terms)
    : layout_(std::move(layout)), terms_(std::move(terms)) {}

Amplitude SparseState::amplitude(const Labels& labels) const {
  auto it = terms_.find(labels);
  return it == terms_.end() ? Amplitude{} : it->second;
}

double SparseState::norm_squared() const { return norm_of(terms_); }

namespace detail {
SparseState assemble(RegisterLayout layout, SparseState::TermMap terms) {
  prune(terms);
  return SparseState(std::move(layout), std::move(terms));
}
}  // namespace detail

// ---------------------------------------------------------------- matrix

DenseMatrix::DenseMatrix(std::size_t dim, std::vector<Amplitude> row_major)
    : dim_(dim), data_(std::move(row_major)) {
  if (data_.size() != dim_ * dim_) {
    throw Error(ErrorCode::DimMismatch, "matrix data does not match dimension");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t dim) {
  DenseMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    m(i, i) = 1.0;
  }
  return m;
}

DenseMatrix DenseMatrix::adjoint() const {
  DenseMatrix out(dim_);
  for (std::size_t r = 0; r < dim_; ++r) {
    for (std::size_t c = 0; c < dim_; ++c) {
      out(c, r) = std::conj((*this)(r, c));
    }
  }
  return out;
}

DenseMatrix DenseMatrix::operator*(const DenseMatrix& rhs) const {
  if (rhs.dim_ != dim_) {
    throw Error(ErrorCode::DimMismatch, "matrix product dimension mismatch");
  }
  DenseMatrix out(dim_);
  for (std::size_t r = 0; r < dim_; ++r) {
    for (std::size_t k = 0; k < dim_; ++k) {
      const Amplitude a = (*this)(r, k);
      if (a == Amplitude{}) {
        continue;
      }
      for (std::size_t c = 0; c < dim_; ++c) {
        out(r, c) += a * rhs(k, c);
      }
    }
  }
  return out;
}

bool DenseMatrix::is_unitary(double tol) const {
  const DenseMatrix p = adjoint() * (*this);
  for (std::size_t r = 0; r < dim_; ++r) {
    for (std::size_t c = 0; c < dim_; ++c) {
      const Amplitude expect = r == c ? 1.0 : 0.0;
      if (std::abs(p(r, c) - expect) > tol) {
        return false;
      }
    }
  }
  return true;
}

// ----------------------------------------------------------------- gates

namespace gates {

GateSpec x(SiteId site) { return xor_constant(std::move(site), 1); }

GateSpec z(SiteId site) { return parity_phase(std::move(site), 2, 1); }

GateSpec h(SiteId site) { return walsh_hadamard(std::move(site), 2); }

GateSpec s(SiteId site) {
  return LocalUnitary{{std::move(site)}, DenseMatrix(2, {1.0, 0.0, 0.0, Amplitude{0.0, 1.0}})};
}

GateSpec matrix(SiteId site, DenseMatrix m) { return LocalUnitary{{std::move(site)}, std::move(m)}; }

GateSpec walsh_hadamard(SiteId site, Label dim) {
  if (!is_power_of_two(dim)) {
    throw Error(ErrorCode::DimMismatch, "Walsh-Hadamard needs a power-of-two dimension");
  }
  DenseMatrix m(dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (Label r = 0; r < dim; ++r) {
    for (Label c = 0; c < dim; ++c) {
      m(r, c) = (std::popcount(r & c) % 2 == 0 ? scale : -scale);
    }
  }
  return LocalUnitary{{std::move(site)}, std::move(m)};
}

GateSpec xor_constant(SiteId site, Label value) {
  return BasisPermutation{{std::move(site)}, [value](const Labels& in) { return Labels{in[0] ^ value}; }};
}

GateSpec parity_phase(SiteId site, Label dim, Label mask) {
  DenseMatrix m(dim);
  for (Label x = 0; x < dim; ++x) {
    m(x, x) = std::popcount(x & mask) % 2 == 0 ? 1.0 : -1.0;
  }
  return LocalUnitary{{std::move(site)}, std::move(m)};
}

GateSpec swap_values(SiteId site, Label a, Label b) {
  return BasisPermutation{{std::move(site)}, [a, b](const Labels& in) {
                            if (in[0] == a) return Labels{b};
                            if (in[0] == b) return Labels{a};
                            return in;
                          }};
}

GateSpec xor_add(SiteId src, SiteId dst) {
  return BasisPermutation{{std::move(src), std::move(dst)},
                          [](const Labels& in) { return Labels{in[0], in[1] ^ in[0]}; }};
}

}  // namespace gates

// ------------------------------------------------------------ operations

SparseState make_basis_state(const RegisterLayout& layout, const Labels& labels) {
  if (!layout.valid(labels)) {
    throw Error(ErrorCode::InvalidLabel, "labels do not fit the layout");
  }
  return detail::assemble(layout, TermMap{{labels, Amplitude{1.0, 0.0}}});
}

SparseState superpose(const RegisterLayout& layout,
                      const std::vector<std::pair<Amplitude, Labels>>& terms) {
  TermMap acc;
  for (const auto& [weight, labels] : terms) {
    if (!layout.valid(labels)) {
      throw Error(ErrorCode::InvalidLabel, "labels do not fit the layout");
    }
    acc[labels] += weight;
  }
  prune(acc);
  const double n = norm_of(acc);
  if (acc.empty() || n == 0.0) {
    throw Error(ErrorCode::ZeroState, "superposition has no nonzero weight");
  }
  const double scale = 1.0 / std::sqrt(n);
  for (auto& [labels, amp] : acc) {
    amp *= scale;
  }
  return detail::assemble(layout, std::move(acc));
}

SparseState apply_gate(const SparseState& state, const GateSpec& gate) {
  TermMap out = apply_to_terms(state.layout(), state.terms(), gate);
  prune(out);
  check_norm(out, "apply_gate");
  return detail::assemble(state.layout(), std::move(out));
}

SparseState apply_controlled(const SparseState& state, const std::vector<SiteId>& control_sites,
                             const Labels& control_labels, const GateSpec& gate) {
  const auto& layout = state.layout();
  if (control_sites.size() != control_labels.size()) {
    throw Error(ErrorCode::InvalidArgument, "control sites and labels differ in length");
  }
  const auto cidx = resolve(layout, control_sites);
  const auto tidx = resolve(layout, targets_of(gate));
  for (auto c : cidx) {
    if (std::find(tidx.begin(), tidx.end(), c) != tidx.end()) {
      throw Error(ErrorCode::SiteClash, "site '" + layout[c].id + "' is both control and target");
    }
  }

  TermMap active;
  TermMap out;
  for (const auto& [labels, amp] : state.terms()) {
    bool match = true;
    for (std::size_t k = 0; k < cidx.size() && match; ++k) {
      match = labels[cidx[k]] == control_labels[k];
    }
    (match ? active : out).emplace(labels, amp);
  }
  if (active.empty()) {
    // gate validity is still enforced
    (void)apply_to_terms(layout, active, gate);
    return state;
  }
  for (auto& [labels, amp] : apply_to_terms(layout, active, gate)) {
    out[labels] += amp;
  }
  prune(out);
  check_norm(out, "apply_controlled");
  return detail::assemble(layout, std::move(out));
}

SparseState xor_add(const SparseState& state, const SiteId& src, const SiteId& dst) {
  const auto& layout = state.layout();
  const Label ds = layout.dim(src);
  const Label dd = layout.dim(dst);
  if (src == dst) {
    throw Error(ErrorCode::SiteClash, "xor_add source and destination coincide");
  }
  if (ds != dd || !is_power_of_two(ds)) {
    throw Error(ErrorCode::DimMismatch, "xor_add needs equal power-of-two dimensions");
  }
  return apply_gate(state, gates::xor_add(src, dst));
}

std::map<Labels, double> outcome_distribution(const SparseState& state,
                                              const std::vector<SiteId>& sites) {
  if (sites.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no sites to measure");
  }
  const auto idx = resolve(state.layout(), sites);
  std::map<Labels, double> dist;
  for (const auto& [labels, amp] : state.terms()) {
    dist[pick(labels, idx)] += std::norm(amp);
  }
  return dist;
}

std::pair<SparseState, double> project_sites(const SparseState& state,
                                             const std::vector<SiteId>& sites,
                                             const Labels& outcome, bool keep_sites) {
  const auto& layout = state.layout();
  const auto idx = resolve(layout, sites);
  if (outcome.size() != idx.size()) {
    throw Error(ErrorCode::InvalidLabel, "outcome width does not match measured sites");
  }
  std::vector<bool> measured(layout.size(), false);
  for (auto i : idx) {
    measured[i] = true;
  }
  std::vector<Site> kept_sites;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (keep_sites || !measured[i]) {
      kept_sites.push_back(layout[i]);
    }
  }

  TermMap out;
  double prob = 0.0;
  for (const auto& [labels, amp] : state.terms()) {
    if (pick(labels, idx) != outcome) {
      continue;
    }
    prob += std::norm(amp);
    Labels rest;
    if (keep_sites) {
      rest = labels;
    } else {
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!measured[i]) {
          rest.push_back(labels[i]);
        }
      }
    }
    out[std::move(rest)] += amp;
  }
  if (prob <= 0.0 || out.empty()) {
    throw Error(ErrorCode::ZeroState, "outcome has probability zero");
  }
  const double scale = 1.0 / std::sqrt(prob);
  for (auto& [labels, amp] : out) {
    amp *= scale;
  }
  return {detail::assemble(RegisterLayout(std::move(kept_sites)), std::move(out)), prob};
}

Measurement measure_sites(const SparseState& state, const std::vector<SiteId>& sites,
                          std::uint64_t seed) {
  const auto dist = outcome_distribution(state, sites);
  CounterRng rng(seed);
  const double u = rng.uniform() * norm_of(state.terms());
  double acc = 0.0;
  const Labels* chosen = nullptr;
  for (const auto& [outcome, p] : dist) {
    if (p <= 0.0) {
      continue;
    }
    chosen = &outcome;
    acc += p;
    if (u < acc) {
      break;
    }
  }
  // `chosen` falls back to the last positive outcome when rounding leaves u
  // at the very top of the range.
  auto [post, prob] = project_sites(state, sites, *chosen);
  return Measurement{*chosen, std::move(post), prob};
}

Amplitude inner_product(const SparseState& a, const SparseState& b) {
  if (!(a.layout() == b.layout())) {
    throw Error(ErrorCode::LayoutMismatch, "states live on different layouts");
  }
  Amplitude acc{};
  const auto& small = a.term_count() <= b.term_count() ? a : b;
  const auto& large = &small == &a ? b : a;
  for (const auto& [labels, amp] : small.terms()) {
    auto it = large.terms().find(labels);
    if (it != large.terms().end()) {
      acc += &small == &a ? std::conj(amp) * it->second : std::conj(it->second) * amp;
    }
  }
  return acc;
}

double fidelity(const SparseState& a, const SparseState& b) {
  const double f = std::norm(inner_product(a, b));
  return std::clamp(f, 0.0, 1.0);
}

SparseState merge_layouts(const SparseState& a, const SparseState& b) {
  RegisterLayout layout = a.layout().concat(b.layout());
  TermMap out;
  for (const auto& [la, aa] : a.terms()) {
    for (const auto& [lb, ab] : b.terms()) {
      Labels joined = la;
      joined.insert(joined.end(), lb.begin(), lb.end());
      out.emplace(std::move(joined), aa * ab);
    }
  }
  return detail::assemble(std::move(layout), std::move(out));
}

SparseState remap_basis(const SparseState& state, const RegisterLayout& layout,
                        const std::function<Labels(const Labels&)>& map) {
  TermMap out;
  for (const auto& [labels, amp] : state.terms()) {
    Labels next = map(labels);
    if (!layout.valid(next)) {
      throw Error(ErrorCode::InvalidLabel, "remapped labels do not fit the target layout");
    }
    if (!out.emplace(std::move(next), amp).second) {
      throw Error(ErrorCode::NotBijection, "remap merged two distinct terms");
    }
  }
  return detail::assemble(layout, std::move(out));
}

SparseState reorder_sites(const SparseState& state, const std::vector<SiteId>& order) {
  const auto& layout = state.layout();
  if (order.size() != layout.size()) {
    throw Error(ErrorCode::LayoutMismatch, "reorder must list every site exactly once");
  }
  const auto idx = resolve(layout, order);
  std::vector<Site> sites;
  sites.reserve(idx.size());
  for (auto i : idx) {
    sites.push_back(layout[i]);
  }
  return remap_basis(state, RegisterLayout(std::move(sites)),
                     [&idx](const Labels& l) { return pick(l, idx); });
}

std::pair<SparseState, SparseState> factor_out(const SparseState& state,
                                               const std::vector<SiteId>& sites) {
  const auto& layout = state.layout();
  const auto idx = resolve(layout, sites);
  std::vector<std::size_t> rest_idx;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (std::find(idx.begin(), idx.end(), i) == idx.end()) {
      rest_idx.push_back(i);
    }
  }
  std::vector<Site> factor_sites;
  std::vector<Site> rest_sites;
  for (auto i : idx) factor_sites.push_back(layout[i]);
  for (auto i : rest_idx) rest_sites.push_back(layout[i]);

  // A product state is a rank-one amplitude matrix between the two parts.
  std::map<Labels, TermMap> rows;
  for (const auto& [labels, amp] : state.terms()) {
    rows[pick(labels, rest_idx)][pick(labels, idx)] = amp;
  }
  // Reference row: the one with the largest weight.
  const TermMap* ref = nullptr;
  double best = -1.0;
  for (const auto& [rest, row] : rows) {
    const double w = norm_of(row);
    if (w > best) {
      best = w;
      ref = &row;
    }
  }
  TermMap factor = *ref;
  const double fscale = 1.0 / std::sqrt(best);
  for (auto& [l, a] : factor) a *= fscale;

  TermMap rest_terms;
  for (const auto& [rest, row] : rows) {
    // coefficient c with row = c * factor
    Amplitude c{};
    for (const auto& [l, a] : factor) {
      auto it = row.find(l);
      if (it != row.end()) c += std::conj(a) * it->second;
    }
    double resid = 0.0;
    std::set<Labels> keys;
    for (const auto& [l, a] : row) keys.insert(l);
    for (const auto& [l, a] : factor) keys.insert(l);
    for (const auto& l : keys) {
      auto rit = row.find(l);
      auto fit = factor.find(l);
      const Amplitude rv = rit == row.end() ? Amplitude{} : rit->second;
      const Amplitude fv = fit == factor.end() ? Amplitude{} : fit->second;
      resid += std::norm(rv - c * fv);
    }
    if (resid > kNormTolerance) {
      throw Error(ErrorCode::NotSeparable, "sites are entangled with the rest of the state");
    }
    rest_terms[rest] = c;
  }
  prune(rest_terms);
  return {detail::assemble(RegisterLayout(std::move(rest_sites)), std::move(rest_terms)),
          detail::assemble(RegisterLayout(std::move(factor_sites)), std::move(factor))};
}

DenseMatrix reduced_density_matrix(const SparseState& state, const std::vector<SiteId>& sites) {
  const auto& layout = state.layout();
  const auto idx = resolve(layout, sites);
  std::size_t dim = 1;
  for (auto i : idx) dim *= layout[i].dim;
  std::vector<std::size_t> rest_idx;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (std::find(idx.begin(), idx.end(), i) == idx.end()) rest_idx.push_back(i);
  }
  std::map<Labels, std::vector<std::pair<std::size_t, Amplitude>>> groups;
  for (const auto& [labels, amp] : state.terms()) {
    std::size_t flat = 0;
    for (auto i : idx) flat = flat * layout[i].dim + labels[i];
    groups[pick(labels, rest_idx)].emplace_back(flat, amp);
  }
  DenseMatrix rho(dim);
  for (const auto& [rest, entries] : groups) {
    for (const auto& [r, ar] : entries) {
      for (const auto& [c, ac] : entries) {
        rho(r, c) += ar * std::conj(ac);
      }
    }
  }
  return rho;
}

}  // namespace qnet
