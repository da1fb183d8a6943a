#pragma once

// Dense state vectors over L two-level systems and matrix-free operator
// kernels. Basis index bit j is the state of site j; bit value 0 is |up>
// (Ising) or |g> (Rydberg), so Z|0> = +|0> and N|1> = |1>.

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace echoprep {

using cplx = std::complex<double>;
using Index = std::uint64_t;

inline constexpr int kMaxSites = 24;

class StateVector {
 public:
  StateVector() = default;
  // |0...0>
  explicit StateVector(int n_sites);
  StateVector(int n_sites, std::vector<cplx> amplitudes);

  static StateVector basis_state(int n_sites, Index index);
  // |++...+>, the ground state of -sum X.
  static StateVector product_plus(int n_sites);

  int n_sites() const noexcept { return n_sites_; }
  std::size_t dim() const noexcept { return amplitudes_.size(); }

  std::span<cplx> data() noexcept { return amplitudes_; }
  std::span<const cplx> data() const noexcept { return amplitudes_; }
  cplx operator[](Index i) const { return amplitudes_[i]; }
  cplx& operator[](Index i) { return amplitudes_[i]; }

  double norm() const;
  void normalize();

 private:
  int n_sites_ = 0;
  std::vector<cplx> amplitudes_;
};

std::size_t hilbert_dim(int n_sites);

cplx inner(std::span<const cplx> bra, std::span<const cplx> ket);
cplx inner(const StateVector& bra, const StateVector& ket);
double fidelity(const StateVector& a, const StateVector& b);
double norm(std::span<const cplx> v);

enum class Pauli : std::uint8_t { X, Y, Z, N };

struct PauliFactor {
  int site = 0;
  Pauli op = Pauli::Z;
};

struct PauliTerm {
  double coefficient = 1.0;
  std::vector<PauliFactor> factors;
};

// A real linear combination of Pauli/number-operator strings. Each string acts
// on distinct sites, which keeps every term (and the sum) Hermitian.
struct OperatorSpec {
  std::vector<PauliTerm> terms;
  std::string tag;

  OperatorSpec& add(double coefficient, std::vector<PauliFactor> factors);
};

// OperatorSpec lowered to (flip mask, output-indexed weight) blocks:
//   (O psi)[c] = sum_blocks w_block[c] * psi[c ^ mask_block].
class CompiledOperator {
 public:
  CompiledOperator() = default;
  static CompiledOperator compile(const OperatorSpec& spec, int n_sites);
  // Diagonal operator given by its values on the computational basis.
  static CompiledOperator diagonal(int n_sites, std::vector<double> values);

  int n_sites() const noexcept { return n_sites_; }
  std::size_t dim() const noexcept { return hilbert_dim(n_sites_); }
  bool is_diagonal() const noexcept;
  // Real diagonal values; empty unless the operator is diagonal and real.
  const std::vector<double>& diagonal_values() const noexcept { return real_diagonal_; }

  void apply(std::span<const cplx> in, std::span<cplx> out) const;
  // out += alpha * O in
  void apply_add(cplx alpha, std::span<const cplx> in, std::span<cplx> out) const;

 private:
  struct Block {
    Index mask = 0;
    bool unit = false;  // every weight equals one (pure X strings)
    std::vector<cplx> weight;
  };
  int n_sites_ = 0;
  std::vector<Block> blocks_;
  std::vector<double> real_diagonal_;
};

StateVector apply_operator(const CompiledOperator& op, const StateVector& psi);
StateVector apply_operator(const OperatorSpec& op, const StateVector& psi);

// Unitary symmetry generator used to label eigenstates by character.
class SymmetryOperator {
 public:
  // prod_j X_j
  static SymmetryOperator global_flip(int n_sites);
  // Site j is mapped to site perm[j].
  static SymmetryOperator site_permutation(std::vector<int> perm);

  int n_sites() const noexcept { return n_sites_; }
  // Smallest m >= 1 with P^m = 1.
  int order() const noexcept { return order_; }
  void apply(std::span<const cplx> in, std::span<cplx> out) const;
  // Projects onto the eigenspace with eigenvalue exp(2 pi i sector / order).
  void project(int sector, std::span<cplx> v, std::span<cplx> scratch_a,
               std::span<cplx> scratch_b) const;

 private:
  int n_sites_ = 0;
  int order_ = 1;
  Index flip_mask_ = 0;
  std::vector<Index> image_;  // basis index map for permutations
};

}  // namespace echoprep
