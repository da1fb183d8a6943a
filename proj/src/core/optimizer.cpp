#include "echoprep/optimizer.hpp"

#include <ceres/ceres.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>

#include "echoprep/error.hpp"
#include "echoprep/parallel.hpp"

namespace echoprep {

std::string to_string(DerivativeMode mode) {
  return mode == DerivativeMode::exact_frechet ? "exact_frechet" : "first_order";
}

DerivativeMode parse_derivative_mode(const std::string& name) {
  if (name == "exact_frechet") return DerivativeMode::exact_frechet;
  if (name == "first_order") return DerivativeMode::first_order;
  throw InvalidArgument("unknown gradient mode '" + name + "' (expected first_order or exact_frechet)");
}

// --- cost ----------------------------------------------------------------------

namespace {

bool is_flip_eigenstate(const StateVector& psi) {
  const auto flip = SymmetryOperator::global_flip(psi.n_sites());
  std::vector<cplx> out(psi.dim());
  flip.apply(psi.data(), out);
  double plus = 0.0, minus = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    plus += std::norm(out[i] - psi[i]);
    minus += std::norm(out[i] + psi[i]);
  }
  return std::min(plus, minus) <= 1e-24;
}

}  // namespace

CostEvaluator::CostEvaluator(const Model& model, StateVector target, DisorderEnsemble ensemble,
                             CostOptions options)
    : model_(model), target_(std::move(target)), ensemble_(std::move(ensemble)), options_(options) {
  if (target_.dim() != model_.dim()) throw InvalidArgument("target dimension does not match the model");
  if (ensemble_.size() == 0) throw InvalidArgument("empty disorder ensemble");
  if ((ensemble_.kind == DisorderKind::scalar_field) != (model_.kind() == ModelKind::ising)) {
    throw InvalidArgument("ensemble kind does not match the model");
  }
  const bool fold = options_.fold_symmetric && ensemble_.kind == DisorderKind::scalar_field &&
                    model_.perturbation_is_odd() && is_flip_eigenstate(target_) &&
                    is_flip_eigenstate(model_.initial_state());
  std::map<double, std::size_t> entry_of_field;
  for (std::size_t i = 0; i < ensemble_.size(); ++i) {
    if (fold) {
      const double eps = ensemble_.fields[i];
      const double key = std::abs(eps);
      auto it = entry_of_field.find(key);
      if (it != entry_of_field.end()) {
        auto& e = plan_[it->second];
        e.weight += 1.0;
        e.mirrors.push_back(i);
        continue;
      }
      entry_of_field[key] = plan_.size();
    }
    plan_.push_back({i, 1.0, {}});
  }
  for (const auto& e : plan_) perturbations_.push_back(model_.sample(ensemble_, e.sample));
  workers_.resize(static_cast<std::size_t>(worker_count(plan_.size(), options_.jobs)));
}

Propagator& CostEvaluator::worker(int id) {
  auto& w = workers_.at(static_cast<std::size_t>(id));
  if (!w) w = std::make_unique<Propagator>(model_, options_.krylov);
  return *w;
}

double CostEvaluator::cost(const ControlProtocol& protocol) {
  return evaluate(protocol, false).cost;
}

CostResult CostEvaluator::evaluate(const ControlProtocol& protocol, bool with_gradient,
                                   DerivativeMode mode) {
  protocol.validate();
  const std::size_t n_plan = plan_.size();
  const int n_steps = protocol.n_steps();
  const std::size_t d = model_.dim();
  const int workers = worker_count(n_plan, options_.jobs);
  if (workers_.size() < static_cast<std::size_t>(workers)) workers_.resize(workers);
  for (int w = 0; w < workers; ++w) worker(w);

  std::vector<double> infid(n_plan, 0.0);
  std::vector<std::vector<double>> grads(with_gradient ? n_plan : 0);

  parallel_for(n_plan, options_.jobs, [&](std::size_t i, int w) {
    Propagator& prop = *workers_[w];
    const Perturbation& pert = perturbations_[i];
    try {
      if (!with_gradient) {
        const StateVector psi = prop.run(protocol, pert);
        infid[i] = 1.0 - std::norm(inner(target_, psi));
        return;
      }
      // Forward sweep storing psi_j before each step; slot N holds psi(T).
      std::vector<cplx> states((n_steps + 1) * d);
      const StateVector init = model_.initial_state();
      std::copy(init.data().begin(), init.data().end(), states.begin());
      const auto slot = [&](int j) { return std::span<cplx>(states.data() + j * d, d); };
      for (int j = 0; j < n_steps; ++j) {
        std::copy(slot(j).begin(), slot(j).end(), slot(j + 1).begin());
        prop.step(protocol, j, pert, slot(j + 1));
      }
      const cplx overlap = inner(target_.data(), slot(n_steps));
      infid[i] = 1.0 - std::norm(overlap);
      // Backward sweep: chi_j = U_{j+1}^dag ... U_{N-1}^dag |target>.
      auto& g = grads[i];
      g.assign(n_steps, 0.0);
      std::vector<cplx> chi(target_.data().begin(), target_.data().end());
      std::vector<cplx> dpsi(d), tmp(d);
      for (int j = n_steps - 1; j >= 0; --j) {
        if (mode == DerivativeMode::first_order) {
          prop.derivative(protocol, j).apply(slot(j + 1), dpsi);
          const cplx f{0.0, -protocol.dt()};
          for (auto& z : dpsi) z *= f;
        } else {
          std::copy(slot(j).begin(), slot(j).end(), tmp.begin());
          prop.step_with_derivative(protocol, j, pert, tmp, dpsi, mode);
        }
        g[j] = -2.0 * (std::conj(overlap) * inner(chi, dpsi)).real();
        if (j > 0) prop.step_adjoint(protocol, j, pert, chi);
      }
    } catch (const NumericalError& e) {
      throw NumericalError("sample " + std::to_string(plan_[i].sample) + ": " + e.what(), e.residual());
    }
  });

  CostResult out;
  const double n_samples = static_cast<double>(ensemble_.size());
  out.sample_infidelity.assign(ensemble_.size(), 0.0);
  for (std::size_t i = 0; i < n_plan; ++i) {
    out.cost += plan_[i].weight * infid[i];
    out.sample_infidelity[plan_[i].sample] = infid[i];
    for (auto m : plan_[i].mirrors) out.sample_infidelity[m] = infid[i];
  }
  out.cost /= n_samples;
  if (with_gradient) {
    out.gradient.assign(n_steps, 0.0);
    for (std::size_t i = 0; i < n_plan; ++i) {
      for (int j = 0; j < n_steps; ++j) out.gradient[j] += plan_[i].weight * grads[i][j];
    }
    for (auto& g : out.gradient) g /= n_samples;
  }
  return out;
}

double cost(const Model& model, const ControlProtocol& protocol, const DisorderEnsemble& ensemble,
            const StateVector& target, const CostOptions& options) {
  CostEvaluator ev(model, target, ensemble, options);
  return ev.cost(protocol);
}

CostResult cost_gradient(const Model& model, const ControlProtocol& protocol,
                         const DisorderEnsemble& ensemble, const StateVector& target,
                         DerivativeMode mode, const CostOptions& options) {
  CostEvaluator ev(model, target, ensemble, options);
  return ev.evaluate(protocol, true, mode);
}

PenaltyTerms penalty(const ControlProtocol& protocol, double eta, double mu) {
  if (!(eta >= 0.0) || !(mu >= 0.0)) throw InvalidArgument("penalty weights must be >= 0");
  const int n = protocol.n_steps();
  const auto& s = protocol.values;
  PenaltyTerms p;
  p.gradient.assign(n, 0.0);
  const double w = eta * n;
  for (int j = 0; j + 1 < n; ++j) {
    const double diff = s[j + 1] - s[j];
    p.value += w * diff * diff;
    p.gradient[j] -= 2.0 * w * diff;
    p.gradient[j + 1] += 2.0 * w * diff;
  }
  if (mu > 0.0) {
    const double a = s.front() - protocol.s0_target;
    const double b = s.back() - protocol.sf_target;
    p.value += mu * (a * a + b * b);
    p.gradient.front() += 2.0 * mu * a;
    p.gradient.back() += 2.0 * mu * b;
  }
  return p;
}

// --- L-BFGS driver ---------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

// Objective over a parameter vector; gradient may be null.
using Objective = std::function<double(const double*, double*)>;

class ObjectiveFunction final : public ceres::FirstOrderFunction {
 public:
  ObjectiveFunction(Objective f, int n) : f_(std::move(f)), n_(n) {}
  bool Evaluate(const double* x, double* value, double* gradient) const override {
    *value = f_(x, gradient);
    return std::isfinite(*value);
  }
  int NumParameters() const override { return n_; }

 private:
  Objective f_;
  int n_;
};

class TraceCallback final : public ceres::IterationCallback {
 public:
  explicit TraceCallback(OptimizationReport& r) : report_(r) {}
  ceres::CallbackReturnType operator()(const ceres::IterationSummary& s) override {
    report_.cost_trace.push_back(s.cost);
    report_.gradient_norm_trace.push_back(s.gradient_max_norm);
    return ceres::SOLVER_CONTINUE;
  }

 private:
  OptimizationReport& report_;
};

struct MinimizeResult {
  std::vector<double> x;
  OptimizationReport report;
};

MinimizeResult minimize(Objective f, std::vector<double> x0, const OptConfig& config) {
  MinimizeResult out;
  out.report.eta = config.eta;
  out.report.gradient_mode = config.gradient_mode;
  const int n = static_cast<int>(x0.size());
  ceres::GradientProblem problem(new ObjectiveFunction(std::move(f), n));
  ceres::GradientProblemSolver::Options options;
  options.line_search_direction_type = ceres::LBFGS;
  options.line_search_type = ceres::WOLFE;
  options.max_lbfgs_rank = config.lbfgs_memory;
  options.gradient_tolerance = config.gradient_tolerance;
  options.function_tolerance = config.function_tolerance;
  options.parameter_tolerance = 1e-14;
  options.max_num_iterations = config.max_iterations;
  options.logging_type = ceres::SILENT;
  options.minimizer_progress_to_stdout = false;
  TraceCallback trace(out.report);
  options.callbacks.push_back(&trace);
  ceres::GradientProblemSolver::Summary summary;
  out.x = std::move(x0);
  ceres::Solve(options, problem, out.x.data(), &summary);
  out.report.initial_cost = summary.initial_cost;
  out.report.final_cost = summary.final_cost;
  out.report.iterations = static_cast<int>(summary.iterations.size()) - 1;
  out.report.converged = summary.termination_type == ceres::CONVERGENCE;
  out.report.termination = std::string(ceres::TerminationTypeToString(summary.termination_type)) +
                           ": " + summary.message;
  return out;
}

}  // namespace

OptimizationReport grape(const Model& model, const StateVector& target,
                         const DisorderEnsemble& ensemble, const ControlProtocol& initial,
                         const OptConfig& config) {
  initial.validate();
  if (!(config.eta >= 0.0) || !(config.mu >= 0.0)) throw InvalidArgument("eta and mu must be >= 0");
  if (config.max_iterations < 0) throw InvalidArgument("max_iterations must be >= 0");
  const auto start = Clock::now();
  const double mu = model.kind() == ModelKind::ising ? config.mu : 0.0;
  CostEvaluator ev(model, target, ensemble, config.cost);
  ControlProtocol work = initial;
  const int n = initial.n_steps();
  std::string failure;
  const Objective f = [&](const double* x, double* grad) -> double {
    std::copy(x, x + n, work.values.begin());
    try {
      work.validate();
      const PenaltyTerms pen = penalty(work, config.eta, mu);
      if (grad == nullptr) return ev.cost(work) + pen.value;
      const CostResult r = ev.evaluate(work, true, config.gradient_mode);
      for (int j = 0; j < n; ++j) grad[j] = r.gradient[j] + pen.gradient[j];
      return r.cost + pen.value;
    } catch (const std::exception& e) {
      // Rejected by the line search; the best iterate is kept.
      failure = e.what();
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  MinimizeResult res = minimize(f, initial.values, config);
  OptimizationReport& r = res.report;
  r.protocol = initial;
  r.protocol.values = res.x;
  r.mu = mu;
  r.sigma = ensemble.sigma;
  r.n_samples = ensemble.size();
  r.seed = ensemble.master_seed;
  if (!failure.empty()) r.termination += " (rejected evaluation: " + failure + ")";
  const CostResult final_eval = ev.evaluate(r.protocol, false);
  r.final_infidelity = final_eval.cost;
  for (double x : final_eval.sample_infidelity) r.sample_fidelities.push_back(1.0 - x);
  r.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

std::vector<double> t_grid(double t_start, double dt, double t_end) {
  if (!(t_start > 0.0) || !(dt > 0.0) || t_end < t_start) {
    throw InvalidArgument("T grid needs 0 < T_start <= T_end and dT > 0");
  }
  std::vector<double> grid;
  const long count = std::lround(std::floor((t_end - t_start) / dt + 1e-9));
  for (long i = 0; i <= count; ++i) grid.push_back(t_start + i * dt);
  return grid;
}

std::vector<ContinuationLeg> continuation_T(const Model& model, const StateVector& target,
                                            const DisorderEnsemble& ensemble,
                                            const ControlProtocol& initial,
                                            std::vector<double> grid, SweepDirection direction,
                                            const OptConfig& config) {
  if (grid.empty()) throw InvalidArgument("T grid is empty");
  std::sort(grid.begin(), grid.end());
  if (direction == SweepDirection::reverse) std::reverse(grid.begin(), grid.end());
  std::vector<ContinuationLeg> legs;
  ControlProtocol guess = initial;
  for (double t : grid) {
    ContinuationLeg leg;
    leg.total_time = t;
    try {
      leg.report = grape(model, target, ensemble, guess.rescaled(t), config);
      leg.ok = true;
      guess = leg.report.protocol;
    } catch (const std::exception& e) {
      leg.error = e.what();
    }
    legs.push_back(std::move(leg));
  }
  return legs;
}

Crossover find_crossover(const Model& model, const StateVector& target,
                         const DisorderEnsemble& ensemble,
                         const std::vector<ContinuationLeg>& robust,
                         const std::vector<ContinuationLeg>& reference, double margin,
                         const CostOptions& options) {
  if (!(margin >= 0.0 && margin < 1.0)) throw InvalidArgument("crossover margin must lie in [0, 1)");
  CostEvaluator ev(model, target, ensemble, options);
  Crossover c;
  c.margin = margin;
  for (const auto& r : robust) {
    if (!r.ok) continue;
    const auto it = std::find_if(reference.begin(), reference.end(), [&](const ContinuationLeg& x) {
      return x.ok && std::abs(x.total_time - r.total_time) <= 1e-9 * std::max(1.0, r.total_time);
    });
    if (it == reference.end()) continue;
    c.total_time.push_back(r.total_time);
    c.robust_cost.push_back(r.report.final_infidelity);
    c.reference_cost.push_back(ev.cost(it->report.protocol));
  }
  // Sort by T, then scan from the largest T downwards.
  std::vector<std::size_t> order(c.total_time.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return c.total_time[a] < c.total_time[b]; });
  Crossover sorted;
  sorted.margin = margin;
  for (auto i : order) {
    sorted.total_time.push_back(c.total_time[i]);
    sorted.robust_cost.push_back(c.robust_cost[i]);
    sorted.reference_cost.push_back(c.reference_cost[i]);
  }
  for (std::size_t k = sorted.total_time.size(); k-- > 0;) {
    if (sorted.robust_cost[k] < (1.0 - margin) * sorted.reference_cost[k]) {
      sorted.t_star = sorted.total_time[k];
    } else {
      break;
    }
  }
  return sorted;
}

// --- GOAT ----------------------------------------------------------------------

double GoatAnsatz::value(double t) const {
  double s = t / total_time;
  for (std::size_t n = 0; n < coefficients.size(); ++n) {
    s += coefficients[n] * std::sin(2.0 * std::numbers::pi * double(n + 1) * t / total_time);
  }
  return s;
}

ControlProtocol GoatAnsatz::materialize(int n_steps) const {
  if (n_steps < 1) throw InvalidArgument("protocol needs N >= 1 steps");
  if (!(total_time > 0.0)) throw InvalidArgument("GOAT ansatz needs T > 0");
  for (double c : coefficients) {
    if (!std::isfinite(c)) throw InvalidArgument("non-finite GOAT coefficient");
  }
  ControlProtocol p;
  p.total_time = total_time;
  p.values.resize(n_steps);
  for (int j = 0; j < n_steps; ++j) p.values[j] = value(p.time(j));
  return p;
}

namespace {

std::vector<double> project_gradient(const GoatAnsatz& a, const ControlProtocol& p,
                                     const std::vector<double>& ds) {
  std::vector<double> g(a.coefficients.size(), 0.0);
  for (std::size_t n = 0; n < g.size(); ++n) {
    for (int j = 0; j < p.n_steps(); ++j) {
      g[n] += std::sin(2.0 * std::numbers::pi * double(n + 1) * p.time(j) / a.total_time) * ds[j];
    }
  }
  return g;
}

}  // namespace

GoatValue goat_eval_and_grad(const GoatAnsatz& ansatz, const Model& model,
                             const DisorderEnsemble& ensemble, const StateVector& target,
                             int n_steps, DerivativeMode mode, const CostOptions& options) {
  if (ansatz.coefficients.empty()) throw InvalidArgument("GOAT ansatz needs N_c >= 1");
  const ControlProtocol p = ansatz.materialize(n_steps);
  const CostResult r = cost_gradient(model, p, ensemble, target, mode, options);
  return {r.cost, project_gradient(ansatz, p, r.gradient)};
}

std::vector<OptimizationReport> goat_continuation(const Model& model, const DisorderEnsemble& ensemble,
                                                  const StateVector& target, double total_time,
                                                  int nc_max, double c1_init, int n_steps,
                                                  const OptConfig& config) {
  if (nc_max < 1) throw InvalidArgument("N_c max must be >= 1");
  CostEvaluator ev(model, target, ensemble, config.cost);
  std::vector<OptimizationReport> reports;
  std::vector<double> coeffs{c1_init};
  for (int nc = 1; nc <= nc_max; ++nc) {
    const auto start = Clock::now();
    GoatAnsatz ansatz{coeffs, total_time};
    std::string failure;
    const Objective f = [&](const double* x, double* grad) -> double {
      std::copy(x, x + nc, ansatz.coefficients.begin());
      try {
        const ControlProtocol p = ansatz.materialize(n_steps);
        if (grad == nullptr) return ev.cost(p);
        const CostResult r = ev.evaluate(p, true, config.gradient_mode);
        const auto g = project_gradient(ansatz, p, r.gradient);
        std::copy(g.begin(), g.end(), grad);
        return r.cost;
      } catch (const std::exception& e) {
        failure = e.what();
        return std::numeric_limits<double>::quiet_NaN();
      }
    };
    OptConfig leg_config = config;
    leg_config.eta = 0.0;
    MinimizeResult res = minimize(f, coeffs, leg_config);
    OptimizationReport& r = res.report;
    r.mu = 0.0;
    r.sigma = ensemble.sigma;
    r.n_samples = ensemble.size();
    r.seed = ensemble.master_seed;
    r.goat_coefficients = res.x;
    ansatz.coefficients = res.x;
    r.protocol = ansatz.materialize(n_steps);
    if (!failure.empty()) r.termination += " (rejected evaluation: " + failure + ")";
    const CostResult final_eval = ev.evaluate(r.protocol, false);
    r.final_infidelity = final_eval.cost;
    for (double x : final_eval.sample_infidelity) r.sample_fidelities.push_back(1.0 - x);
    r.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    reports.push_back(r);
    coeffs = res.x;
    coeffs.push_back(0.0);
  }
  return reports;
}

int count_crossings(const ControlProtocol& protocol, double s_c) {
  int count = 0;
  for (int j = 0; j + 1 < protocol.n_steps(); ++j) {
    const bool a = protocol.values[j] > s_c;
    const bool b = protocol.values[j + 1] > s_c;
    if (a != b) ++count;
  }
  return count;
}

}  // namespace echoprep
