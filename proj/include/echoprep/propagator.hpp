#pragma once

// Time evolution under piecewise-constant controls:
//   |psi(T)> = U_{N-1} ... U_0 |psi_0>,  U_j = exp(-i dt H(s_j, t_j)).

#include <span>

#include "echoprep/krylov.hpp"
#include "echoprep/models.hpp"
#include "echoprep/protocol.hpp"

namespace echoprep {

// Adapts a matrix-free Hamiltonian to the Krylov interface.
LinearMap as_linear_map(const MatrixFreeHamiltonian& h);

// psi <- exp(-i dt H) psi
KrylovInfo evolve_step(const MatrixFreeHamiltonian& h, double dt, StateVector& psi,
                       const KrylovOptions& options = {});

// Not thread-safe; use one instance per worker.
class Propagator {
 public:
  explicit Propagator(const Model& model, KrylovOptions options = {});

  const Model& model() const noexcept { return model_; }
  const KrylovOptions& options() const noexcept { return options_; }

  // Hamiltonian of step j. extra_field adds to the Ising perturbation strength.
  const MatrixFreeHamiltonian& hamiltonian(const ControlProtocol& protocol, int j,
                                           const Perturbation& pert, double extra_field = 0.0);

  // dH/ds at step j.
  const MatrixFreeHamiltonian& derivative(const ControlProtocol& protocol, int j);

  // psi <- U_j psi
  KrylovInfo step(const ControlProtocol& protocol, int j, const Perturbation& pert,
                  std::span<cplx> psi, double extra_field = 0.0);
  // psi <- U_j^dagger psi
  KrylovInfo step_adjoint(const ControlProtocol& protocol, int j, const Perturbation& pert,
                          std::span<cplx> psi);
  // psi <- U_j psi, dpsi <- (dU_j/ds_j) psi
  KrylovInfo step_with_derivative(const ControlProtocol& protocol, int j, const Perturbation& pert,
                                  std::span<cplx> psi, std::span<cplx> dpsi, DerivativeMode mode);

  // Evolution from the model's initial state.
  StateVector run(const ControlProtocol& protocol, const Perturbation& pert);
  // Ising: per-step longitudinal field h_j on top of pert.
  StateVector run_with_field(const ControlProtocol& protocol, const Perturbation& pert,
                             std::span<const double> field);

 private:
  const Model& model_;
  KrylovOptions options_;
  KrylovWorkspace ws_;
  MatrixFreeHamiltonian h_;
  MatrixFreeHamiltonian dh_;
};

StateVector propagate(const Model& model, const ControlProtocol& protocol, const Perturbation& pert,
                      const KrylovOptions& options = {});

}  // namespace echoprep
