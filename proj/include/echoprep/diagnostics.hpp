#pragma once

// Ground-state transition diagnostics on a control grid lambda (lambda = s for
// Ising, Delta / Omega0 at full drive for Rydberg):
//   dN/dlambda = (<N>_{lambda + d} - <N>_lambda) / d
//   chi = -(2 / d^2) ln |<E0(lambda) | E0(lambda + d)>|
// and the pooled log-log fit of infidelity against h L^2.

#include <string>
#include <vector>

#include "echoprep/eigensolver.hpp"
#include "echoprep/models.hpp"

namespace echoprep {

struct DiagnosticOptions {
  double delta_lambda = 0.002;
  EigenOptions eigen;
  int jobs = 0;
  // Relative gap below which the ground state counts as degenerate.
  double degeneracy_tol = 1e-9;
};

struct DiagnosticScan {
  std::vector<double> lambda;
  std::vector<double> excitation;  // <N> at lambda
  std::vector<double> dn_dlambda;
  std::vector<double> chi;

  // "lambda,dN_dlambda,chi"
  void write_csv(const std::string& path) const;
};

DiagnosticScan diagnostic_scan(const Model& model, const std::vector<double>& lambda_grid,
                               const DiagnosticOptions& options = {});

std::vector<double> excitation_derivative(const Model& model, const std::vector<double>& lambda_grid,
                                          double delta_lambda);
std::vector<double> fidelity_susceptibility(const Model& model, const std::vector<double>& lambda_grid,
                                            double delta_lambda);

struct CriticalWindow {
  double lambda_lo = 0.0;
  double lambda_hi = 0.0;
  double peak_dn = 0.0;
  double peak_chi = 0.0;

  double midpoint() const noexcept { return 0.5 * (lambda_lo + lambda_hi); }
};

// Discrete argmax of both arrays (first maximum on ties); throws when either
// peak sits on the first or last grid point.
CriticalWindow critical_window(const std::vector<double>& lambda_grid,
                               const std::vector<double>& dn_dlambda, const std::vector<double>& chi);
CriticalWindow critical_window(const DiagnosticScan& scan);

struct ScalingPoint {
  double h = 0.0;
  int n_sites = 0;
  double infidelity = 0.0;
};

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  // RMS deviation of log I from the pooled fit.
  double residual = 0.0;
  int n_used = 0;
  int n_excluded = 0;
  bool poor_collapse = false;
  std::vector<std::string> warnings;
};

// Least squares of log I against log(|h| L^2) pooled over sizes. Needs at least
// two sizes with three usable fields each.
ScalingFit scaling_fit(const std::vector<ScalingPoint>& data, double collapse_tolerance = 0.05);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double correlation = 0.0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace echoprep
