#include "echoprep/noise.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numbers>
#include <random>

#include "echoprep/error.hpp"
#include "echoprep/parallel.hpp"
#include "echoprep/propagator.hpp"

namespace echoprep {

void NoiseModel::validate() const {
  if (!(tau_c > 0.0)) throw InvalidArgument("noise: tau_c must be positive");
  if (!(sigma >= 0.0)) throw InvalidArgument("noise: sigma must be non-negative");
  if (!(delta_f > 0.0)) throw InvalidArgument("noise: delta_f must be positive");
  if (!(f_max > 0.0) || !(1.0 / (1.0 + std::pow(tau_c * f_max, 16)) < 1e-6)) {
    throw InvalidArgument("noise: f_max must satisfy S(f_max)/S(0) < 1e-6");
  }
  if (n_components() > 10'000'000) throw InvalidArgument("noise: f_max / delta_f is too large");
}

double NoiseModel::amplitude() const {
  return sigma * sigma * tau_c * 8.0 * std::sin(std::numbers::pi / 16.0) / std::numbers::pi;
}

int NoiseModel::n_components() const { return static_cast<int>(std::ceil(f_max / delta_f - 1e-12)); }

double NoiseModel::series_variance() const {
  double v = psd(0.0, *this) * delta_f;
  for (int k = 1; k <= n_components(); ++k) v += 2.0 * psd(k * delta_f, *this) * delta_f;
  return v;
}

NoiseModel NoiseModel::with_defaults(double tau_c, double sigma, double total_time,
                                     std::uint64_t master_seed) {
  if (!(total_time > 0.0)) throw InvalidArgument("noise: duration must be positive");
  NoiseModel m;
  m.tau_c = tau_c;
  m.sigma = sigma;
  m.delta_f = std::min(1.0 / (10.0 * total_time), 1.0 / (10.0 * tau_c));
  m.f_max = 4.0 / tau_c;
  m.master_seed = master_seed;
  return m;
}

double psd(double f, const NoiseModel& model) {
  return model.amplitude() / (1.0 + std::pow(model.tau_c * f, 16));
}

std::vector<double> synthesize(const NoiseModel& model, double total_time,
                               const std::vector<double>& sample_times, std::uint64_t seed) {
  if (!(total_time > 0.0)) throw InvalidArgument("noise: duration must be positive");
  model.validate();
  std::vector<double> h(sample_times.size(), 0.0);
  if (model.sigma == 0.0) return h;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const int n = model.n_components();
  const double a0 = std::sqrt(2.0 * psd(0.0, model) * model.delta_f) * std::cos(phase(rng));
  for (auto& x : h) x = a0;
  for (int k = 1; k <= n; ++k) {
    const double f = k * model.delta_f;
    const double a = std::sqrt(4.0 * psd(f, model) * model.delta_f);
    const double phi = phase(rng);
    for (std::size_t i = 0; i < h.size(); ++i) {
      h[i] += a * std::cos(2.0 * std::numbers::pi * f * sample_times[i] + phi);
    }
  }
  return h;
}

void gauss_hermite_normal(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw InvalidArgument("quadrature needs at least one node");
  // Golub-Welsch for the probabilists' Hermite polynomials: off-diagonal sqrt(k).
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) jac(k, k - 1) = jac(k - 1, k) = std::sqrt(double(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    nodes[i] = es.eigenvalues()(i);
    weights[i] = es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
  }
}

void NoiseBenchmark::write_csv(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw IoError("cannot write '" + path + "'");
  std::fprintf(f, "tau_c,protocol_id,mean_infidelity,stderr,n_ok\n");
  for (const auto& r : rows) {
    std::fprintf(f, "%.17g,%s,%.17g,%.17g,%d\n", r.tau_c, r.protocol_id.c_str(), r.mean_infidelity,
                 r.stderr_infidelity, r.n_ok);
  }
  if (std::fclose(f) != 0) throw IoError("error writing '" + path + "'");
}

const NoiseRow& NoiseBenchmark::row(double tau_c, const std::string& protocol_id) const {
  for (const auto& r : rows) {
    if (r.protocol_id == protocol_id && std::abs(r.tau_c - tau_c) <= 1e-12 * std::abs(tau_c)) return r;
  }
  throw InvalidArgument("no benchmark row for protocol '" + protocol_id + "'");
}

NoiseBenchmark noise_benchmark(const Model& model, const StateVector& target,
                               const std::vector<NamedProtocol>& protocols,
                               const std::vector<double>& tau_c_grid,
                               const NoiseBenchmarkOptions& options) {
  if (model.kind() != ModelKind::ising) throw InvalidArgument("noise benchmark needs an Ising model");
  if (protocols.empty()) throw InvalidArgument("noise benchmark needs at least one protocol");
  if (options.n_realizations < 1) throw InvalidArgument("noise benchmark needs n_realizations >= 1");
  if (!(options.sigma >= 0.0)) throw InvalidArgument("noise benchmark: sigma must be non-negative");
  for (const auto& p : protocols) p.protocol.validate();
  for (double tc : tau_c_grid) {
    if (!(tc > 0.0)) throw InvalidArgument("noise benchmark: tau_c must be positive");
  }

  NoiseBenchmark out;
  out.sigma = options.sigma;
  out.n_realizations = options.n_realizations;
  out.master_seed = options.master_seed;
  const int workers = worker_count(static_cast<std::size_t>(options.n_realizations), options.jobs);
  std::vector<std::unique_ptr<Propagator>> props(workers);
  const auto prop = [&](int w) -> Propagator& {
    if (!props[w]) props[w] = std::make_unique<Propagator>(model, options.krylov);
    return *props[w];
  };
  const auto infidelity = [&](const StateVector& psi) { return 1.0 - fidelity(target, psi); };

  std::vector<double> nodes, weights;
  gauss_hermite_normal(options.static_quadrature_nodes, nodes, weights);
  for (const auto& np : protocols) {
    StaticReference ref;
    ref.protocol_id = np.id;
    std::vector<double> vals(nodes.size());
    parallel_for(nodes.size(), options.jobs, [&](std::size_t i, int w) {
      vals[i] = infidelity(prop(w).run(np.protocol, model.with_field(options.sigma * nodes[i])));
    });
    for (std::size_t i = 0; i < nodes.size(); ++i) ref.mean_infidelity += weights[i] * vals[i];
    ref.noiseless_infidelity = infidelity(prop(0).run(np.protocol, model.unperturbed()));
    out.static_reference.push_back(ref);
  }

  const Perturbation clean = model.unperturbed();
  for (std::size_t ti = 0; ti < tau_c_grid.size(); ++ti) {
    const double tau_c = tau_c_grid[ti];
    const std::uint64_t tau_seed = sample_seed(options.master_seed, ti);
    for (const auto& np : protocols) {
      const ControlProtocol& p = np.protocol;
      const NoiseModel nm = NoiseModel::with_defaults(tau_c, options.sigma, p.total_time, tau_seed);
      nm.validate();
      std::vector<double> times(p.n_steps());
      for (int j = 0; j < p.n_steps(); ++j) times[j] = p.time(j);
      std::vector<double> value(options.n_realizations, 0.0);
      std::vector<char> ok(options.n_realizations, 0);
      parallel_for(value.size(), options.jobs, [&](std::size_t r, int w) {
        const auto field = synthesize(nm, p.total_time, times, sample_seed(tau_seed, r));
        try {
          value[r] = infidelity(prop(w).run_with_field(p, clean, field));
          ok[r] = 1;
        } catch (const NumericalError&) {
          ok[r] = 0;
        }
      });
      NoiseRow row;
      row.tau_c = tau_c;
      row.protocol_id = np.id;
      row.delta_f = nm.delta_f;
      row.f_max = nm.f_max;
      double sum = 0.0, sum2 = 0.0;
      for (std::size_t r = 0; r < value.size(); ++r) {
        if (!ok[r]) {
          ++row.n_failed;
          continue;
        }
        ++row.n_ok;
        sum += value[r];
        sum2 += value[r] * value[r];
      }
      if (row.n_ok > 0) {
        row.mean_infidelity = sum / row.n_ok;
        if (row.n_ok > 1) {
          const double var = std::max(0.0, (sum2 - row.n_ok * row.mean_infidelity * row.mean_infidelity) /
                                                (row.n_ok - 1));
          row.stderr_infidelity = std::sqrt(var / row.n_ok);
        }
      } else {
        row.mean_infidelity = std::numeric_limits<double>::quiet_NaN();
      }
      out.rows.push_back(row);
    }
  }
  return out;
}

}  // namespace echoprep
