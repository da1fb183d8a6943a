#pragma once

// Krylov-subspace action of exp(-i dt H) for Hermitian H, and of the
// block-augmented exponential exp(-i dt [[H, dH], [0, H]]) whose upper block
// applied to (0, psi) is the directional derivative of exp(-i dt H) psi.

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "echoprep/hilbert.hpp"

namespace echoprep {

// out = A in; in and out never alias.
using LinearMap = std::function<void(std::span<const cplx>, std::span<cplx>)>;

struct KrylovOptions {
  double tol = 1e-12;
  int max_dim = 40;
  // dt is halved up to this many times before giving up.
  int max_splits = 12;
};

struct KrylovInfo {
  int dimension = 0;  // largest subspace used
  int substeps = 1;
  double error_estimate = 0.0;
};

enum class DerivativeMode { exact_frechet, first_order };

// Reusable scratch storage; one per thread. Growing one slot never moves
// another.
class KrylovWorkspace {
 public:
  static constexpr std::size_t kSlots = 8;
  std::vector<cplx>& buffer(std::size_t slot, std::size_t size);

 private:
  std::array<std::vector<cplx>, kSlots> buffers_;
};

// psi <- exp(-i dt H) psi
KrylovInfo expm_multiply(const LinearMap& h, double dt, std::span<cplx> psi,
                         const KrylovOptions& options, KrylovWorkspace& ws);

// psi <- exp(-i dt H) psi and dpsi <- (d/ds exp(-i dt H(s))) psi, where
// dh = dH/ds. first_order uses -i dt dH exp(-i dt H) psi.
KrylovInfo step_with_derivative(const LinearMap& h, const LinearMap& dh, double dt,
                                std::span<cplx> psi, std::span<cplx> dpsi, DerivativeMode mode,
                                const KrylovOptions& options, KrylovWorkspace& ws);

}  // namespace echoprep
