#pragma once

// First-order perturbative infidelity
//   I = eps^2 sum_k | int_0^T dt V_k0(s(t)) exp(-i int_t^T dtau dE_k(s(tau))) |^2
// from gauge-fixed spectral scans, the echo interference conditions, and the
// piecewise-linear protocol family with its cost landscape.

#include <optional>
#include <string>
#include <vector>

#include "echoprep/eigensolver.hpp"
#include "echoprep/models.hpp"
#include "echoprep/optimizer.hpp"
#include "echoprep/protocol.hpp"

namespace echoprep {

struct ScanOptions {
  int n_levels = 2;
  EigenOptions eigen;
  // Successive same-index eigenvectors must overlap at least this much.
  double overlap_threshold = 0.5;
  // Resolve levels by the model's symmetry; Ising scans are further restricted
  // to the translation-invariant sector, which holds the dynamics.
  bool use_symmetry = true;
  int jobs = 0;
};

struct SpectralScan {
  std::vector<double> s;
  int n_levels = 0;
  std::vector<std::vector<double>> energies;  // [point][level]
  std::vector<std::vector<cplx>> v_k0;        // [point][k] = <E_k|V|E_0>
  std::vector<std::vector<int>> sectors;      // [point][level]
  std::vector<double> min_overlap;            // tracking overlap (1 at the first point)

  double gap(std::size_t point, int k) const { return energies[point][k] - energies[point][0]; }
  // Linear interpolation in s; throws outside the grid unless clip.
  double gap_at(double s, int k, bool clip = false) const;
  cplx v_at(double s, int k, bool clip = false) const;
  bool covers(double lo, double hi) const;

  // "s,E0,E1,...,ReV10,ImV10[,ReV20,ImV20...]"
  void write_csv(const std::string& path) const;
};

// Scan with an explicit perturbation operator V.
SpectralScan spectral_scan(const Model& model, const LinearMap& v, std::vector<double> s_grid,
                           const ScanOptions& options = {});
// Ising: V is the model's perturbation operator.
SpectralScan spectral_scan(const Model& model, std::vector<double> s_grid,
                           const ScanOptions& options = {});

std::vector<double> uniform_grid(double lo, double hi, int points);

struct OracleOptions {
  int n_sectors = 2;  // sums k = 1 .. n_sectors - 1
  // Restrict the outer integral to s(t) > s_c.
  bool ordered_only = false;
  double s_c = 0.5;
  bool clip = false;
};

double firstorder_infidelity(const ControlProtocol& protocol, const SpectralScan& scan, double epsilon,
                             const OracleOptions& options = {});

// Piecewise-linear through (0, 0), (T/3, s_II), (2T/3, s_III), (T, 1).
double piecewise_value(double t, double total_time, double s_ii, double s_iii);
ControlProtocol piecewise_protocol(double total_time, double s_ii, double s_iii, int n_steps);

struct EchoSegment {
  double t_begin = 0.0;
  double t_end = 0.0;
  bool ordered = false;
};

struct EchoReport {
  double s_c = 0.5;
  std::vector<double> crossing_times;
  std::vector<EchoSegment> segments;
  std::vector<cplx> amplitudes;  // per ordered segment, int V_10 dt
  std::vector<double> phases;    // per trivial segment between ordered ones, mod 2 pi
  double predicted_coefficient = 0.0;  // predicted infidelity / eps^2
  double predicted_infidelity = 0.0;
};

EchoReport echo_conditions(const ControlProtocol& protocol, const SpectralScan& scan, double s_c,
                           double epsilon = 1.0, bool clip = false);

struct LandscapeOptions {
  int n_grid = 41;
  int n_steps = 150;
  double s_c = 0.5;
  int jobs = 0;
  CostOptions cost;
};

struct ContourPoint {
  double s_ii = 0.0;
  double s_iii = 0.0;
};

struct Landscape {
  std::vector<double> axis;  // shared grid for s_II and s_III
  // Row-major [i_II * n + i_III].
  std::vector<double> cost;
  std::vector<double> phase;    // alpha, NaN without a II / III / IV structure
  std::vector<double> balance;  // (A_II - A_IV) / (|A_II| + |A_IV|), same mask
  ContourPoint argmin;
  double min_cost = 0.0;
  std::vector<std::pair<ContourPoint, ContourPoint>> phase_contour;    // alpha = pi (mod 2 pi)
  std::vector<std::pair<ContourPoint, ContourPoint>> balance_contour;  // equal amplitudes
  std::vector<ContourPoint> intersections;

  std::size_t n() const noexcept { return axis.size(); }
  // "sII,sIII,cost"
  void write_csv(const std::string& path) const;
  void write_contours_csv(const std::string& path) const;
};

Landscape landscape(const Model& model, double total_time, const DisorderEnsemble& ensemble,
                    const StateVector& target, const SpectralScan& scan,
                    const LandscapeOptions& options = {});

}  // namespace echoprep
