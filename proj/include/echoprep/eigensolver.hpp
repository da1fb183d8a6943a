#pragma once

// Lowest eigenpairs of a Hermitian operator by thick-restart Lanczos with full
// reorthogonalization, optionally resolved by symmetry sector.

#include <cstdint>
#include <optional>
#include <vector>

#include "echoprep/hilbert.hpp"
#include "echoprep/krylov.hpp"

namespace echoprep {

struct EigenPair {
  double energy = 0.0;
  std::vector<cplx> vector;
  // Character index k of the symmetry eigenvalue exp(2 pi i k / order); 0
  // when no symmetry was supplied.
  int sector = 0;
  double residual = 0.0;
};

struct EigenOptions {
  double tol = 1e-10;  // residual bound, relative to max(1, |E|)
  int max_basis = 0;   // 0: automatic
  int max_restarts = 500;
  std::uint64_t seed = 0x5eed5eedULL;
  // Each sector is solved separately and results are merged; energies closer
  // than degeneracy_tol are ordered by sector.
  std::optional<SymmetryOperator> symmetry;
  double degeneracy_tol = 1e-10;
  // Restrict the search to one sector of an additional commuting symmetry.
  std::optional<SymmetryOperator> constraint;
  int constraint_sector = 0;
};

// k lowest eigenpairs in ascending order. Returns fewer than k when the
// (constrained) space is smaller.
std::vector<EigenPair> lowest_eigenpairs(const LinearMap& h, std::size_t dim, int k,
                                         const EigenOptions& options = {});

}  // namespace echoprep
