#include "echoprep/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "echoprep/error.hpp"
#include "echoprep/parallel.hpp"

namespace echoprep {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Index i and weight f such that s = (1 - f) grid[i] + f grid[i + 1].
std::pair<std::size_t, double> locate(const std::vector<double>& grid, double s, bool clip) {
  const double lo = grid.front(), hi = grid.back();
  const double slack = 1e-12 * std::max(1.0, hi - lo);
  if (s < lo - slack || s > hi + slack) {
    if (!clip) {
      throw InvalidArgument("control value " + std::to_string(s) + " outside the scanned range [" +
                            std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
  }
  if (grid.size() == 1 || s <= lo) return {0, 0.0};
  if (s >= hi) return {grid.size() - 2, 1.0};
  const auto it = std::upper_bound(grid.begin(), grid.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - grid.begin()) - 1;
  return {i, (s - grid[i]) / (grid[i + 1] - grid[i])};
}

}  // namespace

double SpectralScan::gap_at(double x, int k, bool clip) const {
  const auto [i, f] = locate(s, x, clip);
  if (s.size() == 1) return gap(0, k);
  return (1.0 - f) * gap(i, k) + f * gap(i + 1, k);
}

cplx SpectralScan::v_at(double x, int k, bool clip) const {
  const auto [i, f] = locate(s, x, clip);
  if (s.size() == 1) return v_k0[0][k];
  return (1.0 - f) * v_k0[i][k] + f * v_k0[i + 1][k];
}

bool SpectralScan::covers(double lo, double hi) const {
  const double slack = 1e-12 * std::max(1.0, s.back() - s.front());
  return !s.empty() && lo >= s.front() - slack && hi <= s.back() + slack;
}

void SpectralScan::write_csv(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw IoError("cannot write '" + path + "'");
  std::fprintf(f, "s");
  for (int k = 0; k < n_levels; ++k) std::fprintf(f, ",E%d", k);
  for (int k = 1; k < n_levels; ++k) std::fprintf(f, ",ReV%d0,ImV%d0", k, k);
  std::fprintf(f, "\n");
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::fprintf(f, "%.17g", s[i]);
    for (int k = 0; k < n_levels; ++k) std::fprintf(f, ",%.17g", energies[i][k]);
    for (int k = 1; k < n_levels; ++k) {
      std::fprintf(f, ",%.17g,%.17g", v_k0[i][k].real(), v_k0[i][k].imag());
    }
    std::fprintf(f, "\n");
  }
  if (std::fclose(f) != 0) throw IoError("error writing '" + path + "'");
}

std::vector<double> uniform_grid(double lo, double hi, int points) {
  if (points < 1) throw InvalidArgument("grid needs at least one point");
  if (points == 1) return {lo};
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = lo + (hi - lo) * double(i) / double(points - 1);
  g.back() = hi;
  return g;
}

SpectralScan spectral_scan(const Model& model, const LinearMap& v, std::vector<double> s_grid,
                           const ScanOptions& options) {
  if (s_grid.empty()) throw InvalidArgument("spectral scan needs a nonempty grid");
  if (!std::is_sorted(s_grid.begin(), s_grid.end()) ||
      std::adjacent_find(s_grid.begin(), s_grid.end()) != s_grid.end()) {
    throw InvalidArgument("spectral scan grid must be strictly ascending");
  }
  if (options.n_levels < 2) throw InvalidArgument("spectral scan needs n_levels >= 2");
  EigenOptions eopt = options.eigen;
  if (options.use_symmetry) {
    eopt.symmetry = model.symmetry();
    if (model.kind() == ModelKind::ising) {
      std::vector<int> shift(model.n_sites());
      for (int j = 0; j < model.n_sites(); ++j) shift[j] = (j + 1) % model.n_sites();
      eopt.constraint = SymmetryOperator::site_permutation(shift);
      eopt.constraint_sector = 0;
    }
  }
  const std::size_t n_points = s_grid.size();
  const int n_levels = options.n_levels;
  std::vector<std::vector<EigenPair>> pairs(n_points);
  parallel_for(n_points, options.jobs, [&](std::size_t i, int) {
    MatrixFreeHamiltonian h;
    model.instantaneous(s_grid[i], 1.0, model.unperturbed(), h);
    pairs[i] = lowest_eigenpairs(as_linear_map(h), model.dim(), n_levels, eopt);
    if (pairs[i].size() < static_cast<std::size_t>(n_levels)) {
      throw NumericalError("spectral scan: fewer than " + std::to_string(n_levels) +
                           " levels available at s=" + std::to_string(s_grid[i]));
    }
  });

  SpectralScan scan;
  scan.s = s_grid;
  scan.n_levels = n_levels;
  std::vector<cplx> w(model.dim());
  for (std::size_t i = 0; i < n_points; ++i) {
    double min_ov = 1.0;
    for (int k = 0; k < n_levels; ++k) {
      auto& vec = pairs[i][k].vector;
      cplx phase;
      if (i == 0) {
        std::size_t best = 0;
        for (std::size_t b = 1; b < vec.size(); ++b) {
          if (std::abs(vec[b]) > std::abs(vec[best]) * (1.0 + 1e-12)) best = b;
        }
        phase = std::conj(vec[best]) / std::abs(vec[best]);
      } else {
        const cplx ov = inner(pairs[i - 1][k].vector, vec);
        const double mag = std::abs(ov);
        min_ov = std::min(min_ov, mag);
        if (mag < options.overlap_threshold) {
          throw NumericalError("gauge tracking lost for level " + std::to_string(k) + " between s=" +
                                   std::to_string(s_grid[i - 1]) + " and s=" +
                                   std::to_string(s_grid[i]) + " (overlap " + std::to_string(mag) + ")",
                               mag);
        }
        phase = std::conj(ov) / mag;
      }
      for (auto& z : vec) z *= phase;
    }
    v(pairs[i][0].vector, w);
    std::vector<double> e(n_levels);
    std::vector<cplx> vk(n_levels);
    std::vector<int> sec(n_levels);
    for (int k = 0; k < n_levels; ++k) {
      e[k] = pairs[i][k].energy;
      vk[k] = inner(pairs[i][k].vector, w);
      sec[k] = pairs[i][k].sector;
    }
    scan.energies.push_back(std::move(e));
    scan.v_k0.push_back(std::move(vk));
    scan.sectors.push_back(std::move(sec));
    scan.min_overlap.push_back(min_ov);
    if (i > 0) pairs[i - 1].clear();
  }
  return scan;
}

SpectralScan spectral_scan(const Model& model, std::vector<double> s_grid, const ScanOptions& options) {
  const CompiledOperator& op = model.perturbation_operator();
  return spectral_scan(
      model, [&op](std::span<const cplx> in, std::span<cplx> out) { op.apply(in, out); },
      std::move(s_grid), options);
}

double firstorder_infidelity(const ControlProtocol& protocol, const SpectralScan& scan, double epsilon,
                             const OracleOptions& options) {
  protocol.validate();
  if (options.n_sectors < 2 || options.n_sectors > scan.n_levels) {
    throw InvalidArgument("n_sectors must lie in [2, n_levels of the scan]");
  }
  const int n = protocol.n_steps();
  const double dt = protocol.dt();
  if (!options.clip) {
    const auto [lo, hi] = std::minmax_element(protocol.values.begin(), protocol.values.end());
    if (!scan.covers(*lo, *hi)) {
      throw InvalidArgument("scan range [" + std::to_string(scan.s.front()) + ", " +
                            std::to_string(scan.s.back()) + "] does not cover the protocol range [" +
                            std::to_string(*lo) + ", " + std::to_string(*hi) + "]");
    }
  }
  double total = 0.0;
  std::vector<double> gap(n);
  for (int k = 1; k < options.n_sectors; ++k) {
    for (int j = 0; j < n; ++j) gap[j] = scan.gap_at(protocol.values[j], k, options.clip);
    // Phi_j = int_{t_j}^T dE: cumulative trapezoid between midpoints, half
    // step at the end.
    double phi = 0.5 * dt * gap[n - 1];
    cplx amp{0.0, 0.0};
    for (int j = n - 1; j >= 0; --j) {
      if (j < n - 1) phi += 0.5 * dt * (gap[j] + gap[j + 1]);
      if (options.ordered_only && !(protocol.values[j] > options.s_c)) continue;
      amp += scan.v_at(protocol.values[j], k, options.clip) * std::exp(cplx{0.0, -phi}) * dt;
    }
    total += std::norm(amp);
  }
  return epsilon * epsilon * total;
}

double piecewise_value(double t, double total_time, double s_ii, double s_iii) {
  const double u = 3.0 * t / total_time;
  if (u <= 1.0) return s_ii * u;
  if (u <= 2.0) return s_ii + (s_iii - s_ii) * (u - 1.0);
  return s_iii + (1.0 - s_iii) * (u - 2.0);
}

ControlProtocol piecewise_protocol(double total_time, double s_ii, double s_iii, int n_steps) {
  if (n_steps < 3) throw InvalidArgument("piecewise protocol needs N >= 3");
  if (!(total_time > 0.0)) throw InvalidArgument("piecewise protocol needs T > 0");
  ControlProtocol p;
  p.total_time = total_time;
  p.values.resize(n_steps);
  for (int j = 0; j < n_steps; ++j) p.values[j] = piecewise_value(p.time(j), total_time, s_ii, s_iii);
  p.validate();
  return p;
}

EchoReport echo_conditions(const ControlProtocol& protocol, const SpectralScan& scan, double s_c,
                           double epsilon, bool clip) {
  protocol.validate();
  const int n = protocol.n_steps();
  const double dt = protocol.dt();
  const auto& s = protocol.values;
  EchoReport r;
  r.s_c = s_c;
  // Segment index per step, and boundaries.
  std::vector<int> seg(n, 0);
  r.segments.push_back({0.0, protocol.total_time, s[0] > s_c});
  for (int j = 1; j < n; ++j) {
    seg[j] = seg[j - 1];
    if ((s[j] > s_c) != (s[j - 1] > s_c)) {
      const double tc = protocol.time(j - 1) + dt * (s_c - s[j - 1]) / (s[j] - s[j - 1]);
      r.crossing_times.push_back(tc);
      r.segments.back().t_end = tc;
      r.segments.push_back({tc, protocol.total_time, s[j] > s_c});
      ++seg[j];
    }
  }
  const std::size_t n_seg = r.segments.size();
  std::vector<cplx> amp(n_seg, cplx{0.0, 0.0});
  std::vector<double> phase(n_seg, 0.0);
  for (int j = 0; j < n; ++j) {
    const auto k = static_cast<std::size_t>(seg[j]);
    if (r.segments[k].ordered) {
      amp[k] += scan.v_at(s[j], 1, clip) * dt;
    } else {
      phase[k] += scan.gap_at(s[j], 1, clip) * dt;
    }
  }
  std::vector<std::size_t> ordered;
  for (std::size_t k = 0; k < n_seg; ++k) {
    if (r.segments[k].ordered) ordered.push_back(k);
  }
  if (ordered.empty()) return r;
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t k = ordered.front() + 1; k < ordered.back(); ++k) {
    if (!r.segments[k].ordered) {
      double a = std::fmod(phase[k], two_pi);
      if (a < 0.0) a += two_pi;
      r.phases.push_back(a);
    }
  }
  cplx total{0.0, 0.0};
  for (auto k : ordered) {
    r.amplitudes.push_back(amp[k]);
    double later = 0.0;
    for (std::size_t q = k + 1; q < n_seg; ++q) {
      if (!r.segments[q].ordered) later += phase[q];
    }
    total += amp[k] * std::exp(cplx{0.0, -later});
  }
  r.predicted_coefficient = std::norm(total);
  r.predicted_infidelity = epsilon * epsilon * r.predicted_coefficient;
  return r;
}

// --- landscape -------------------------------------------------------------------

namespace {

using Segment = std::pair<ContourPoint, ContourPoint>;

double wrap_pi(double x) {
  const double two_pi = 2.0 * std::numbers::pi;
  double y = std::fmod(x + std::numbers::pi, two_pi);
  if (y < 0.0) y += two_pi;
  return y - std::numbers::pi;
}

struct Field {
  std::size_t n;
  const std::vector<double>& axis;
  std::vector<double> f;
  double at(std::size_t i, std::size_t j) const { return f[i * n + j]; }
  // A cell is usable when all corners are finite and do not straddle a wrap.
  bool usable(std::size_t i, std::size_t j, double max_span) const {
    const double c[4] = {at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1)};
    double lo = c[0], hi = c[0];
    for (double x : c) {
      if (!std::isfinite(x)) return false;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    return hi - lo <= max_span;
  }
};

void march(const Field& fld, std::size_t i, std::size_t j, std::vector<Segment>& out) {
  const auto& ax = fld.axis;
  const double x0 = ax[i], x1 = ax[i + 1], y0 = ax[j], y1 = ax[j + 1];
  const double f00 = fld.at(i, j), f10 = fld.at(i + 1, j), f01 = fld.at(i, j + 1), f11 = fld.at(i + 1, j + 1);
  std::vector<ContourPoint> pts;
  const auto edge = [&](double fa, double fb, ContourPoint a, ContourPoint b) {
    if ((fa > 0.0) == (fb > 0.0)) return;
    const double t = fa / (fa - fb);
    pts.push_back({a.s_ii + t * (b.s_ii - a.s_ii), a.s_iii + t * (b.s_iii - a.s_iii)});
  };
  edge(f00, f10, {x0, y0}, {x1, y0});
  edge(f10, f11, {x1, y0}, {x1, y1});
  edge(f11, f01, {x1, y1}, {x0, y1});
  edge(f01, f00, {x0, y1}, {x0, y0});
  for (std::size_t k = 0; k + 1 < pts.size(); k += 2) out.push_back({pts[k], pts[k + 1]});
}

bool has_sign_change(const Field& fld, std::size_t i, std::size_t j) {
  const double c[4] = {fld.at(i, j), fld.at(i + 1, j), fld.at(i, j + 1), fld.at(i + 1, j + 1)};
  bool pos = false, neg = false;
  for (double x : c) (x > 0.0 ? pos : neg) = true;
  return pos && neg;
}

// Common zero of the bilinear interpolants of two fields inside one cell.
std::optional<ContourPoint> cell_intersection(const Field& a, const Field& b, std::size_t i,
                                              std::size_t j) {
  const auto bilinear = [&](const Field& f, double u, double v, double& fu, double& fv) {
    const double f00 = f.at(i, j), f10 = f.at(i + 1, j), f01 = f.at(i, j + 1), f11 = f.at(i + 1, j + 1);
    fu = (1 - v) * (f10 - f00) + v * (f11 - f01);
    fv = (1 - u) * (f01 - f00) + u * (f11 - f10);
    return (1 - u) * (1 - v) * f00 + u * (1 - v) * f10 + (1 - u) * v * f01 + u * v * f11;
  };
  double u = 0.5, v = 0.5;
  for (int it = 0; it < 50; ++it) {
    double au, av, bu, bv;
    const double fa = bilinear(a, u, v, au, av);
    const double fb = bilinear(b, u, v, bu, bv);
    const double det = au * bv - av * bu;
    if (std::abs(det) < 1e-300) return std::nullopt;
    const double du = (fa * bv - av * fb) / det;
    const double dv = (au * fb - fa * bu) / det;
    u -= du;
    v -= dv;
    if (std::abs(du) + std::abs(dv) < 1e-13) break;
  }
  double au, av, bu, bv;
  const double fa = bilinear(a, u, v, au, av);
  const double fb = bilinear(b, u, v, bu, bv);
  const double scale_a = std::abs(a.at(i, j)) + std::abs(a.at(i + 1, j + 1)) + 1e-300;
  const double scale_b = std::abs(b.at(i, j)) + std::abs(b.at(i + 1, j + 1)) + 1e-300;
  if (!(u >= -1e-9 && u <= 1 + 1e-9 && v >= -1e-9 && v <= 1 + 1e-9)) return std::nullopt;
  if (std::abs(fa) > 1e-8 * scale_a || std::abs(fb) > 1e-8 * scale_b) return std::nullopt;
  const auto& ax = a.axis;
  return ContourPoint{ax[i] + u * (ax[i + 1] - ax[i]), ax[j] + v * (ax[j + 1] - ax[j])};
}

}  // namespace

Landscape landscape(const Model& model, double total_time, const DisorderEnsemble& ensemble,
                    const StateVector& target, const SpectralScan& scan,
                    const LandscapeOptions& options) {
  if (options.n_grid < 2) throw InvalidArgument("landscape grid needs at least 2 points per axis");
  Landscape out;
  out.axis = uniform_grid(0.0, 1.0, options.n_grid);
  const std::size_t n = out.axis.size();
  out.cost.assign(n * n, kNaN);
  out.phase.assign(n * n, kNaN);
  out.balance.assign(n * n, kNaN);
  CostOptions copt = options.cost;
  copt.jobs = 1;
  const int workers = worker_count(n * n, options.jobs);
  std::vector<std::unique_ptr<CostEvaluator>> evaluators(workers);
  parallel_for(n * n, options.jobs, [&](std::size_t idx, int w) {
    const double s_ii = out.axis[idx / n], s_iii = out.axis[idx % n];
    if (!evaluators[w]) evaluators[w] = std::make_unique<CostEvaluator>(model, target, ensemble, copt);
    const ControlProtocol p = piecewise_protocol(total_time, s_ii, s_iii, options.n_steps);
    try {
      out.cost[idx] = evaluators[w]->cost(p);
    } catch (const NumericalError& e) {
      throw NumericalError("landscape point (" + std::to_string(s_ii) + ", " + std::to_string(s_iii) +
                               "): " + e.what(),
                           e.residual());
    }
    const EchoReport r = echo_conditions(p, scan, options.s_c, 1.0, true);
    if (r.amplitudes.size() == 2 && r.phases.size() == 1) {
      const double a = r.amplitudes[0].real(), b = r.amplitudes[1].real();
      out.phase[idx] = r.phases[0];
      out.balance[idx] = (a - b) / (std::abs(a) + std::abs(b));
    }
  });
  const auto best = std::min_element(out.cost.begin(), out.cost.end());
  const auto k = static_cast<std::size_t>(best - out.cost.begin());
  out.min_cost = *best;
  out.argmin = {out.axis[k / n], out.axis[k % n]};

  Field alpha{n, out.axis, out.phase};
  for (auto& x : alpha.f) x = std::isfinite(x) ? wrap_pi(x - std::numbers::pi) : kNaN;
  Field bal{n, out.axis, out.balance};
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = 0; j + 1 < n; ++j) {
      const bool ua = alpha.usable(i, j, std::numbers::pi);
      const bool ub = bal.usable(i, j, std::numeric_limits<double>::infinity());
      if (ua) march(alpha, i, j, out.phase_contour);
      if (ub) march(bal, i, j, out.balance_contour);
      if (ua && ub && has_sign_change(alpha, i, j) && has_sign_change(bal, i, j)) {
        if (auto p = cell_intersection(alpha, bal, i, j)) out.intersections.push_back(*p);
      }
    }
  }
  return out;
}

void Landscape::write_csv(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw IoError("cannot write '" + path + "'");
  std::fprintf(f, "sII,sIII,cost\n");
  const std::size_t m = n();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      std::fprintf(f, "%.17g,%.17g,%.17g\n", axis[i], axis[j], cost[i * m + j]);
    }
  }
  if (std::fclose(f) != 0) throw IoError("error writing '" + path + "'");
}

void Landscape::write_contours_csv(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw IoError("cannot write '" + path + "'");
  std::fprintf(f, "contour,sII_a,sIII_a,sII_b,sIII_b\n");
  for (const auto& [a, b] : phase_contour) {
    std::fprintf(f, "phase,%.17g,%.17g,%.17g,%.17g\n", a.s_ii, a.s_iii, b.s_ii, b.s_iii);
  }
  for (const auto& [a, b] : balance_contour) {
    std::fprintf(f, "balance,%.17g,%.17g,%.17g,%.17g\n", a.s_ii, a.s_iii, b.s_ii, b.s_iii);
  }
  for (const auto& p : intersections) {
    std::fprintf(f, "intersection,%.17g,%.17g,%.17g,%.17g\n", p.s_ii, p.s_iii, p.s_ii, p.s_iii);
  }
  if (std::fclose(f) != 0) throw IoError("error writing '" + path + "'");
}

}  // namespace echoprep
