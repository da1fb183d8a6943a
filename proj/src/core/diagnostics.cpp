#include "echoprep/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "echoprep/error.hpp"
#include "echoprep/parallel.hpp"
#include "echoprep/propagator.hpp"

namespace echoprep {

namespace {

struct GroundState {
  std::vector<cplx> vector;
  double excitation = 0.0;
};

// Ground state in the symmetric sector of the model symmetry, where the
// finite-size ground state lives for both models.
GroundState ground_state(const Model& model, double lambda, const DiagnosticOptions& opt) {
  EigenOptions eopt = opt.eigen;
  eopt.symmetry.reset();
  eopt.constraint = model.symmetry();
  eopt.constraint_sector = 0;
  MatrixFreeHamiltonian h;
  model.instantaneous(model.lambda_to_control(lambda), 1.0, model.unperturbed(), h);
  auto pairs = lowest_eigenpairs(as_linear_map(h), model.dim(), 2, eopt);
  if (pairs.empty()) throw NumericalError("no ground state found at lambda=" + std::to_string(lambda));
  if (pairs.size() > 1 &&
      pairs[1].energy - pairs[0].energy <= opt.degeneracy_tol * std::max(1.0, std::abs(pairs[0].energy))) {
    throw NumericalError("degenerate ground state at lambda=" + std::to_string(lambda),
                         pairs[1].energy - pairs[0].energy);
  }
  GroundState g;
  g.vector = std::move(pairs[0].vector);
  std::vector<cplx> nv(g.vector.size());
  model.apply_excitation_number(g.vector, nv);
  g.excitation = inner(g.vector, nv).real();
  return g;
}

}  // namespace

DiagnosticScan diagnostic_scan(const Model& model, const std::vector<double>& lambda_grid,
                               const DiagnosticOptions& options) {
  if (!(options.delta_lambda > 0.0)) throw InvalidArgument("delta_lambda must be positive");
  if (lambda_grid.empty()) throw InvalidArgument("diagnostic scan needs a nonempty grid");
  if (!std::is_sorted(lambda_grid.begin(), lambda_grid.end())) {
    throw InvalidArgument("diagnostic grid must be ascending");
  }
  const std::size_t n = lambda_grid.size();
  DiagnosticScan out;
  out.lambda = lambda_grid;
  out.excitation.resize(n);
  out.dn_dlambda.resize(n);
  out.chi.resize(n);
  const double d = options.delta_lambda;
  parallel_for(n, options.jobs, [&](std::size_t i, int) {
    const GroundState a = ground_state(model, lambda_grid[i], options);
    const GroundState b = ground_state(model, lambda_grid[i] + d, options);
    out.excitation[i] = a.excitation;
    out.dn_dlambda[i] = (b.excitation - a.excitation) / d;
    const double ov = std::min(1.0, std::abs(inner(a.vector, b.vector)));
    out.chi[i] = -(2.0 / (d * d)) * std::log(ov);
  });
  return out;
}

std::vector<double> excitation_derivative(const Model& model, const std::vector<double>& lambda_grid,
                                          double delta_lambda) {
  DiagnosticOptions opt;
  opt.delta_lambda = delta_lambda;
  return diagnostic_scan(model, lambda_grid, opt).dn_dlambda;
}

std::vector<double> fidelity_susceptibility(const Model& model, const std::vector<double>& lambda_grid,
                                            double delta_lambda) {
  DiagnosticOptions opt;
  opt.delta_lambda = delta_lambda;
  return diagnostic_scan(model, lambda_grid, opt).chi;
}

void DiagnosticScan::write_csv(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw IoError("cannot write '" + path + "'");
  std::fprintf(f, "lambda,dN_dlambda,chi\n");
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    std::fprintf(f, "%.17g,%.17g,%.17g\n", lambda[i], dn_dlambda[i], chi[i]);
  }
  if (std::fclose(f) != 0) throw IoError("error writing '" + path + "'");
}

CriticalWindow critical_window(const std::vector<double>& lambda_grid,
                               const std::vector<double>& dn_dlambda, const std::vector<double>& chi) {
  const std::size_t n = lambda_grid.size();
  if (n < 3 || dn_dlambda.size() != n || chi.size() != n) {
    throw InvalidArgument("critical window needs matching arrays of at least 3 points");
  }
  const auto peak = [&](const std::vector<double>& v, const char* name) {
    const auto k = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    if (k == 0 || k == n - 1) {
      throw InvalidArgument(std::string("peak of ") + name + " lies on the grid boundary at lambda=" +
                            std::to_string(lambda_grid[k]) + "; extend the scanned range");
    }
    return lambda_grid[k];
  };
  CriticalWindow w;
  w.peak_dn = peak(dn_dlambda, "dN/dlambda");
  w.peak_chi = peak(chi, "the fidelity susceptibility");
  w.lambda_lo = std::min(w.peak_dn, w.peak_chi);
  w.lambda_hi = std::max(w.peak_dn, w.peak_chi);
  return w;
}

CriticalWindow critical_window(const DiagnosticScan& scan) {
  return critical_window(scan.lambda, scan.dn_dlambda, scan.chi);
}

ScalingFit scaling_fit(const std::vector<ScalingPoint>& data, double collapse_tolerance) {
  ScalingFit fit;
  std::vector<double> x, y;
  std::map<int, int> per_size;
  for (const auto& p : data) {
    if (!(p.infidelity > 0.0) || !(p.h != 0.0) || p.n_sites < 1) {
      ++fit.n_excluded;
      fit.warnings.push_back("excluded point h=" + std::to_string(p.h) + " L=" + std::to_string(p.n_sites) +
                             " I=" + std::to_string(p.infidelity));
      continue;
    }
    x.push_back(std::log(std::abs(p.h) * p.n_sites * p.n_sites));
    y.push_back(std::log(p.infidelity));
    ++per_size[p.n_sites];
  }
  int sizes = 0;
  for (const auto& [l, count] : per_size) {
    if (count >= 3) ++sizes;
  }
  if (sizes < 2) throw InvalidArgument("scaling fit needs at least 2 sizes with 3 usable fields each");
  const LinearFit lf = linear_fit(x, y);
  fit.slope = lf.slope;
  fit.intercept = lf.intercept;
  fit.n_used = static_cast<int>(x.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (lf.intercept + lf.slope * x[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / x.size());
  fit.poor_collapse = fit.residual > collapse_tolerance;
  if (fit.poor_collapse) fit.warnings.push_back("poor collapse: residual " + std::to_string(fit.residual));
  return fit;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("linear fit needs >= 2 matching points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw InvalidArgument("linear fit needs distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.correlation = syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 1.0;
  return f;
}

}  // namespace echoprep
