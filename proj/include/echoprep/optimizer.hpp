#pragma once

// Disorder-averaged preparation cost
//   C = 1 - (1/N_s) sum_l |<target| U_{N-1} ... U_0 |psi_0>|^2
// with its adjoint (GRAPE) gradient, smoothness and boundary penalties, an
// L-BFGS driver, continuation in T, and the Fourier (GOAT) parametrization
//   s(t) = t/T + sum_n c_n sin(2 pi n t / T).

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "echoprep/krylov.hpp"
#include "echoprep/models.hpp"
#include "echoprep/propagator.hpp"
#include "echoprep/protocol.hpp"

namespace echoprep {

struct CostOptions {
  KrylovOptions krylov;
  int jobs = 0;  // 0: process default
  // Evaluate +eps and -eps once when the perturbation is odd under the global
  // flip and the target is a flip eigenstate; I(eps) = I(-eps) exactly.
  bool fold_symmetric = true;
};

struct CostResult {
  double cost = 0.0;
  std::vector<double> gradient;           // dC/ds_j; empty when not requested
  std::vector<double> sample_infidelity;  // one per ensemble sample
};

class CostEvaluator {
 public:
  CostEvaluator(const Model& model, StateVector target, DisorderEnsemble ensemble,
                CostOptions options = {});

  const Model& model() const noexcept { return model_; }
  const StateVector& target() const noexcept { return target_; }
  const DisorderEnsemble& ensemble() const noexcept { return ensemble_; }
  // Samples actually propagated per evaluation (after folding).
  std::size_t distinct_samples() const noexcept { return plan_.size(); }

  double cost(const ControlProtocol& protocol);
  CostResult evaluate(const ControlProtocol& protocol, bool with_gradient,
                      DerivativeMode mode = DerivativeMode::first_order);

 private:
  struct PlanEntry {
    std::size_t sample;
    double weight;
    std::vector<std::size_t> mirrors;  // folded partners sharing this value
  };
  Propagator& worker(int id);

  const Model& model_;
  StateVector target_;
  DisorderEnsemble ensemble_;
  CostOptions options_;
  std::vector<PlanEntry> plan_;
  std::vector<Perturbation> perturbations_;
  std::vector<std::unique_ptr<Propagator>> workers_;
};

double cost(const Model& model, const ControlProtocol& protocol, const DisorderEnsemble& ensemble,
            const StateVector& target, const CostOptions& options = {});

CostResult cost_gradient(const Model& model, const ControlProtocol& protocol,
                         const DisorderEnsemble& ensemble, const StateVector& target,
                         DerivativeMode mode, const CostOptions& options = {});

// eta N sum_j (s_{j+1} - s_j)^2 + mu [(s_0 - s0_target)^2 + (s_{N-1} - sf_target)^2]
struct PenaltyTerms {
  double value = 0.0;
  std::vector<double> gradient;
};
PenaltyTerms penalty(const ControlProtocol& protocol, double eta, double mu);

// --- optimization ------------------------------------------------------------

struct OptConfig {
  double eta = 1e-3;
  // Boundary penalty weight; applied to Ising models only.
  double mu = 1.0;
  DerivativeMode gradient_mode = DerivativeMode::first_order;
  double gradient_tolerance = 1e-8;
  double function_tolerance = 1e-12;
  int max_iterations = 500;
  int lbfgs_memory = 10;
  CostOptions cost;
};

struct OptimizationReport {
  ControlProtocol protocol;
  std::vector<double> cost_trace;           // penalized cost per iteration
  std::vector<double> gradient_norm_trace;  // max-norm of the penalized gradient
  double initial_cost = 0.0;                // penalized
  double final_cost = 0.0;                  // penalized
  double final_infidelity = 0.0;            // unpenalized ensemble cost
  std::vector<double> sample_fidelities;
  int iterations = 0;
  double wall_seconds = 0.0;
  std::string termination;
  bool converged = false;
  // Echo of the settings that produced this report.
  double eta = 0.0;
  double mu = 0.0;
  DerivativeMode gradient_mode = DerivativeMode::first_order;
  double sigma = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  // GOAT only.
  std::vector<double> goat_coefficients;
};

OptimizationReport grape(const Model& model, const StateVector& target,
                         const DisorderEnsemble& ensemble, const ControlProtocol& initial,
                         const OptConfig& config);

enum class SweepDirection { forward, reverse };

struct ContinuationLeg {
  double total_time = 0.0;
  bool ok = false;
  std::string error;
  OptimizationReport report;
};

// Chained optimizations over T grid points (taken in the order given by
// direction: ascending for forward, descending for reverse). Each leg starts
// from the previous successful optimum on the relative grid u = t/T; the first
// leg starts from `initial` rescaled to its T.
std::vector<ContinuationLeg> continuation_T(const Model& model, const StateVector& target,
                                            const DisorderEnsemble& ensemble,
                                            const ControlProtocol& initial,
                                            std::vector<double> t_grid, SweepDirection direction,
                                            const OptConfig& config);

std::vector<double> t_grid(double t_start, double dt, double t_end);

struct Crossover {
  std::vector<double> total_time;
  std::vector<double> robust_cost;     // optimum of the disordered problem
  std::vector<double> reference_cost;  // clean optimum averaged over the ensemble
  std::optional<double> t_star;
  double margin = 0.0;
};

// T* is the smallest grid T from which on robust_cost < (1 - margin) *
// reference_cost holds for every later grid point.
Crossover find_crossover(const Model& model, const StateVector& target,
                         const DisorderEnsemble& ensemble,
                         const std::vector<ContinuationLeg>& robust,
                         const std::vector<ContinuationLeg>& reference, double margin,
                         const CostOptions& options = {});

// --- GOAT ----------------------------------------------------------------------

struct GoatAnsatz {
  std::vector<double> coefficients;
  double total_time = 1.0;

  double value(double t) const;
  ControlProtocol materialize(int n_steps) const;
};

struct GoatValue {
  double cost = 0.0;
  std::vector<double> gradient;  // dC/dc_n
};

GoatValue goat_eval_and_grad(const GoatAnsatz& ansatz, const Model& model,
                             const DisorderEnsemble& ensemble, const StateVector& target,
                             int n_steps, DerivativeMode mode, const CostOptions& options = {});

// N_c = 1 .. nc_max, each warm-started from the previous coefficients with a
// trailing zero appended.
std::vector<OptimizationReport> goat_continuation(const Model& model, const DisorderEnsemble& ensemble,
                                                  const StateVector& target, double total_time,
                                                  int nc_max, double c1_init, int n_steps,
                                                  const OptConfig& config);

// Number of sign changes of s_j - s_c between consecutive steps.
int count_crossings(const ControlProtocol& protocol, double s_c);

std::string to_string(DerivativeMode mode);
DerivativeMode parse_derivative_mode(const std::string& name);

}  // namespace echoprep
