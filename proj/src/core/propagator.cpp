#include "echoprep/propagator.hpp"

#include "echoprep/error.hpp"

namespace echoprep {

LinearMap as_linear_map(const MatrixFreeHamiltonian& h) {
  return [&h](std::span<const cplx> in, std::span<cplx> out) { h.apply(in, out); };
}

KrylovInfo evolve_step(const MatrixFreeHamiltonian& h, double dt, StateVector& psi,
                       const KrylovOptions& options) {
  if (psi.dim() != h.dim()) throw InvalidArgument("evolve_step: dimension mismatch");
  KrylovWorkspace ws;
  return expm_multiply(as_linear_map(h), dt, psi.data(), options, ws);
}

Propagator::Propagator(const Model& model, KrylovOptions options)
    : model_(model), options_(options) {}

const MatrixFreeHamiltonian& Propagator::hamiltonian(const ControlProtocol& protocol, int j,
                                                     const Perturbation& pert, double extra_field) {
  if (j < 0 || j >= protocol.n_steps()) throw InvalidArgument("step index out of range");
  if (extra_field != 0.0) {
    Perturbation shifted = pert;
    shifted.field += extra_field;
    model_.at_time(protocol.values[j], protocol.time(j), protocol.total_time, shifted, h_);
  } else {
    model_.at_time(protocol.values[j], protocol.time(j), protocol.total_time, pert, h_);
  }
  return h_;
}

const MatrixFreeHamiltonian& Propagator::derivative(const ControlProtocol& protocol, int j) {
  if (j < 0 || j >= protocol.n_steps()) throw InvalidArgument("step index out of range");
  model_.control_derivative(protocol.values[j], dh_);
  return dh_;
}

KrylovInfo Propagator::step(const ControlProtocol& protocol, int j, const Perturbation& pert,
                            std::span<cplx> psi, double extra_field) {
  hamiltonian(protocol, j, pert, extra_field);
  return expm_multiply(as_linear_map(h_), protocol.dt(), psi, options_, ws_);
}

KrylovInfo Propagator::step_adjoint(const ControlProtocol& protocol, int j, const Perturbation& pert,
                                    std::span<cplx> psi) {
  hamiltonian(protocol, j, pert);
  return expm_multiply(as_linear_map(h_), -protocol.dt(), psi, options_, ws_);
}

KrylovInfo Propagator::step_with_derivative(const ControlProtocol& protocol, int j,
                                            const Perturbation& pert, std::span<cplx> psi,
                                            std::span<cplx> dpsi, DerivativeMode mode) {
  hamiltonian(protocol, j, pert);
  model_.control_derivative(protocol.values[j], dh_);
  return echoprep::step_with_derivative(as_linear_map(h_), as_linear_map(dh_), protocol.dt(), psi,
                                        dpsi, mode, options_, ws_);
}

StateVector Propagator::run(const ControlProtocol& protocol, const Perturbation& pert) {
  protocol.validate();
  StateVector psi = model_.initial_state();
  for (int j = 0; j < protocol.n_steps(); ++j) step(protocol, j, pert, psi.data());
  return psi;
}

StateVector Propagator::run_with_field(const ControlProtocol& protocol, const Perturbation& pert,
                                       std::span<const double> field) {
  protocol.validate();
  if (model_.kind() != ModelKind::ising) throw InvalidArgument("time-dependent fields apply to Ising models");
  if (field.size() != static_cast<std::size_t>(protocol.n_steps())) {
    throw InvalidArgument("one field value per protocol step required");
  }
  StateVector psi = model_.initial_state();
  for (int j = 0; j < protocol.n_steps(); ++j) step(protocol, j, pert, psi.data(), field[j]);
  return psi;
}

StateVector propagate(const Model& model, const ControlProtocol& protocol, const Perturbation& pert,
                      const KrylovOptions& options) {
  Propagator prop(model, options);
  return prop.run(protocol, pert);
}

}  // namespace echoprep
