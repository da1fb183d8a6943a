#include "echoprep/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "echoprep/error.hpp"

namespace echoprep {

std::size_t hilbert_dim(int n_sites) {
  if (n_sites < 0 || n_sites > kMaxSites) {
    throw InvalidArgument("site count " + std::to_string(n_sites) + " outside [0, " +
                          std::to_string(kMaxSites) + "]");
  }
  return std::size_t{1} << n_sites;
}

StateVector::StateVector(int n_sites)
    : n_sites_(n_sites), amplitudes_(hilbert_dim(n_sites), cplx{0.0, 0.0}) {
  amplitudes_[0] = 1.0;
}

StateVector::StateVector(int n_sites, std::vector<cplx> amplitudes)
    : n_sites_(n_sites), amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() != hilbert_dim(n_sites)) {
    throw InvalidArgument("amplitude count " + std::to_string(amplitudes_.size()) +
                          " does not match 2^" + std::to_string(n_sites));
  }
}

StateVector StateVector::basis_state(int n_sites, Index index) {
  StateVector psi(n_sites);
  if (index >= psi.dim()) throw InvalidArgument("basis index out of range");
  psi.amplitudes_[0] = 0.0;
  psi.amplitudes_[index] = 1.0;
  return psi;
}

StateVector StateVector::product_plus(int n_sites) {
  const std::size_t d = hilbert_dim(n_sites);
  const double a = 1.0 / std::sqrt(static_cast<double>(d));
  return StateVector(n_sites, std::vector<cplx>(d, cplx{a, 0.0}));
}

double StateVector::norm() const { return echoprep::norm(amplitudes_); }

void StateVector::normalize() {
  const double n = norm();
  if (n == 0.0) throw InvalidArgument("cannot normalize the zero vector");
  for (auto& a : amplitudes_) a /= n;
}

double norm(std::span<const cplx> v) {
  double s = 0.0;
  for (const auto& a : v) s += std::norm(a);
  return std::sqrt(s);
}

cplx inner(std::span<const cplx> bra, std::span<const cplx> ket) {
  if (bra.size() != ket.size()) throw InvalidArgument("inner: length mismatch");
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < bra.size(); ++i) {
    re += bra[i].real() * ket[i].real() + bra[i].imag() * ket[i].imag();
    im += bra[i].real() * ket[i].imag() - bra[i].imag() * ket[i].real();
  }
  return {re, im};
}

cplx inner(const StateVector& bra, const StateVector& ket) {
  return inner(bra.data(), ket.data());
}

double fidelity(const StateVector& a, const StateVector& b) { return std::norm(inner(a, b)); }

OperatorSpec& OperatorSpec::add(double coefficient, std::vector<PauliFactor> factors) {
  terms.push_back(PauliTerm{coefficient, std::move(factors)});
  return *this;
}

namespace {

// Weight picked up by a single factor acting on a site whose bit is `bit`.
cplx factor_weight(Pauli p, unsigned bit) {
  switch (p) {
    case Pauli::X:
      return 1.0;
    case Pauli::Y:
      return bit ? cplx{0.0, -1.0} : cplx{0.0, 1.0};
    case Pauli::Z:
      return bit ? -1.0 : 1.0;
    case Pauli::N:
      return bit ? 1.0 : 0.0;
  }
  return 0.0;
}

}  // namespace

CompiledOperator CompiledOperator::compile(const OperatorSpec& spec, int n_sites) {
  const std::size_t d = hilbert_dim(n_sites);
  std::map<Index, std::vector<cplx>> by_mask;
  for (const auto& term : spec.terms) {
    if (!std::isfinite(term.coefficient)) throw InvalidArgument("non-finite operator coefficient");
    Index mask = 0;
    Index seen = 0;
    for (const auto& f : term.factors) {
      if (f.site < 0 || f.site >= n_sites) {
        throw InvalidArgument("operator site " + std::to_string(f.site) + " out of range for L=" +
                              std::to_string(n_sites));
      }
      const Index bit = Index{1} << f.site;
      if (seen & bit) throw InvalidArgument("operator string repeats site " + std::to_string(f.site));
      seen |= bit;
      if (f.op == Pauli::X || f.op == Pauli::Y) mask |= bit;
    }
    auto& w = by_mask[mask];
    if (w.empty()) w.assign(d, cplx{0.0, 0.0});
    // Output-indexed: the input basis state is c ^ mask.
    for (Index c = 0; c < d; ++c) {
      const Index b = c ^ mask;
      cplx weight = term.coefficient;
      for (const auto& f : term.factors) weight *= factor_weight(f.op, (b >> f.site) & 1u);
      w[c] += weight;
    }
  }
  CompiledOperator op;
  op.n_sites_ = n_sites;
  for (auto& [mask, w] : by_mask) {
    Block blk;
    blk.mask = mask;
    blk.unit = std::all_of(w.begin(), w.end(), [](cplx z) { return z == cplx{1.0, 0.0}; });
    if (!blk.unit) blk.weight = std::move(w);
    op.blocks_.push_back(std::move(blk));
  }
  if (op.is_diagonal()) {
    op.real_diagonal_.assign(d, 0.0);
    bool real = true;
    if (!op.blocks_.empty()) {
      const auto& blk = op.blocks_.front();
      for (Index c = 0; c < d; ++c) {
        const cplx w = blk.unit ? cplx{1.0, 0.0} : blk.weight[c];
        if (w.imag() != 0.0) real = false;
        op.real_diagonal_[c] = w.real();
      }
    }
    if (!real) op.real_diagonal_.clear();
  }
  return op;
}

CompiledOperator CompiledOperator::diagonal(int n_sites, std::vector<double> values) {
  const std::size_t d = hilbert_dim(n_sites);
  if (values.size() != d) throw InvalidArgument("diagonal operator: length mismatch");
  CompiledOperator op;
  op.n_sites_ = n_sites;
  Block blk;
  blk.weight.assign(values.begin(), values.end());
  op.blocks_.push_back(std::move(blk));
  op.real_diagonal_ = std::move(values);
  return op;
}

bool CompiledOperator::is_diagonal() const noexcept {
  return std::all_of(blocks_.begin(), blocks_.end(), [](const Block& b) { return b.mask == 0; });
}

void CompiledOperator::apply(std::span<const cplx> in, std::span<cplx> out) const {
  if (out.size() != dim()) throw InvalidArgument("operator apply: length mismatch");
  std::fill(out.begin(), out.end(), cplx{0.0, 0.0});
  apply_add(1.0, in, out);
}

void CompiledOperator::apply_add(cplx alpha, std::span<const cplx> in, std::span<cplx> out) const {
  const std::size_t d = dim();
  if (in.size() != d || out.size() != d) throw InvalidArgument("operator apply: length mismatch");
  for (const auto& blk : blocks_) {
    const Index m = blk.mask;
    if (blk.unit) {
      for (Index c = 0; c < d; ++c) out[c] += alpha * in[c ^ m];
    } else {
      const cplx* w = blk.weight.data();
      for (Index c = 0; c < d; ++c) out[c] += alpha * (w[c] * in[c ^ m]);
    }
  }
}

StateVector apply_operator(const CompiledOperator& op, const StateVector& psi) {
  if (op.n_sites() != psi.n_sites()) throw InvalidArgument("apply_operator: site count mismatch");
  StateVector out(psi.n_sites());
  op.apply(psi.data(), out.data());
  return out;
}

StateVector apply_operator(const OperatorSpec& op, const StateVector& psi) {
  return apply_operator(CompiledOperator::compile(op, psi.n_sites()), psi);
}

SymmetryOperator SymmetryOperator::global_flip(int n_sites) {
  SymmetryOperator s;
  s.n_sites_ = n_sites;
  s.order_ = 2;
  s.flip_mask_ = hilbert_dim(n_sites) - 1;
  return s;
}

SymmetryOperator SymmetryOperator::site_permutation(std::vector<int> perm) {
  const int n = static_cast<int>(perm.size());
  const std::size_t d = hilbert_dim(n);
  std::vector<int> check(perm);
  std::sort(check.begin(), check.end());
  for (int i = 0; i < n; ++i) {
    if (check[i] != i) throw InvalidArgument("site permutation is not a bijection");
  }
  SymmetryOperator s;
  s.n_sites_ = n;
  // Order is the lcm of the cycle lengths.
  std::vector<bool> visited(n, false);
  long long order = 1;
  for (int i = 0; i < n; ++i) {
    if (visited[i]) continue;
    long long len = 0;
    for (int j = i; !visited[j]; j = perm[j]) {
      visited[j] = true;
      ++len;
    }
    order = std::lcm(order, len);
  }
  s.order_ = static_cast<int>(order);
  s.image_.resize(d);
  for (Index b = 0; b < d; ++b) {
    Index img = 0;
    for (int j = 0; j < n; ++j) {
      if ((b >> j) & 1u) img |= Index{1} << perm[j];
    }
    s.image_[b] = img;
  }
  return s;
}

void SymmetryOperator::apply(std::span<const cplx> in, std::span<cplx> out) const {
  const std::size_t d = hilbert_dim(n_sites_);
  if (in.size() != d || out.size() != d) throw InvalidArgument("symmetry apply: length mismatch");
  if (image_.empty()) {
    for (Index b = 0; b < d; ++b) out[b] = in[b ^ flip_mask_];
  } else {
    for (Index b = 0; b < d; ++b) out[image_[b]] = in[b];
  }
}

void SymmetryOperator::project(int sector, std::span<cplx> v, std::span<cplx> scratch_a,
                               std::span<cplx> scratch_b) const {
  const std::size_t d = v.size();
  std::copy(v.begin(), v.end(), scratch_a.begin());
  for (int m = 1; m < order_; ++m) {
    apply(scratch_a.first(d), scratch_b.first(d));
    // exp(-2 pi i k / order), exact at quarter turns
    const long long k = (static_cast<long long>(sector) * m) % order_;
    cplx phase;
    if (k == 0) {
      phase = 1.0;
    } else if (2 * k == order_) {
      phase = -1.0;
    } else if (4 * k == order_) {
      phase = cplx{0.0, -1.0};
    } else if (4 * k == 3 * order_) {
      phase = cplx{0.0, 1.0};
    } else {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / order_;
      phase = cplx{std::cos(angle), std::sin(angle)};
    }
    for (std::size_t i = 0; i < d; ++i) v[i] += phase * scratch_b[i];
    std::swap_ranges(scratch_a.begin(), scratch_a.begin() + d, scratch_b.begin());
  }
  const double inv = 1.0 / order_;
  for (auto& a : v) a *= inv;
}

}  // namespace echoprep
