#pragma once

// Gaussian colored noise with a sharply decaying spectrum
//   S(f) = A / (1 + (tau_c f)^16),  int_{-inf}^{inf} S(f) df = sigma^2,
// synthesized as a random-phase cosine series, and the benchmark of Ising
// preparation protocols under a time-dependent longitudinal field h(t).

#include <cstdint>
#include <string>
#include <vector>

#include "echoprep/hilbert.hpp"
#include "echoprep/krylov.hpp"
#include "echoprep/models.hpp"
#include "echoprep/protocol.hpp"

namespace echoprep {

struct NoiseModel {
  double tau_c = 1.0;
  double sigma = 0.0;
  double delta_f = 0.1;
  double f_max = 4.0;
  std::uint64_t master_seed = 0;

  // Throws unless tau_c > 0, sigma >= 0, delta_f > 0 and S(f_max) / S(0) < 1e-6.
  void validate() const;
  // A = sigma^2 tau_c 8 sin(pi / 16) / pi
  double amplitude() const;
  int n_components() const;
  // Ensemble variance of the synthesized series:
  //   S(0) df + sum_{k>=1} 2 S(f_k) df.
  double series_variance() const;

  // df = min(1/(10 T), 1/(10 tau_c)), f_max = 4 / tau_c.
  static NoiseModel with_defaults(double tau_c, double sigma, double total_time,
                                  std::uint64_t master_seed = 0);
};

double psd(double f, const NoiseModel& model);

// h(t) = sqrt(2 S(0) df) cos(phi_0) + sum_{k>=1} sqrt(4 S(f_k) df) cos(2 pi f_k t + phi_k),
// f_k = k df, phases uniform on [0, 2 pi) from the seed.
std::vector<double> synthesize(const NoiseModel& model, double total_time,
                               const std::vector<double>& sample_times, std::uint64_t seed);

struct NoiseRow {
  double tau_c = 0.0;
  std::string protocol_id;
  double mean_infidelity = 0.0;
  double stderr_infidelity = 0.0;
  int n_ok = 0;
  int n_failed = 0;
  double delta_f = 0.0;
  double f_max = 0.0;
};

struct StaticReference {
  std::string protocol_id;
  // Average over a frozen gaussian field with standard deviation sigma.
  double mean_infidelity = 0.0;
  double noiseless_infidelity = 0.0;
};

struct NoiseBenchmark {
  double sigma = 0.0;
  int n_realizations = 0;
  std::uint64_t master_seed = 0;
  std::vector<NoiseRow> rows;  // ordered by (tau_c, protocol)
  std::vector<StaticReference> static_reference;

  // "tau_c,protocol_id,mean_infidelity,stderr,n_ok"
  void write_csv(const std::string& path) const;
  const NoiseRow& row(double tau_c, const std::string& protocol_id) const;
};

struct NamedProtocol {
  std::string id;
  ControlProtocol protocol;
};

struct NoiseBenchmarkOptions {
  int n_realizations = 500;
  double sigma = 0.003;
  std::uint64_t master_seed = 0;
  int jobs = 0;
  KrylovOptions krylov;
  int static_quadrature_nodes = 40;
};

// Ising only. Realization r at tau_c index i uses the same seed for every
// protocol.
NoiseBenchmark noise_benchmark(const Model& model, const StateVector& target,
                               const std::vector<NamedProtocol>& protocols,
                               const std::vector<double>& tau_c_grid,
                               const NoiseBenchmarkOptions& options);

// Nodes and weights of sum_i w_i f(x_i) ~ E[f(X)], X ~ N(0, 1).
void gauss_hermite_normal(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace echoprep
