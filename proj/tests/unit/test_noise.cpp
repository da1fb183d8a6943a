#include "doctest.h"
#include "echoprep/error.hpp"
#include "echoprep/noise.hpp"
#include "echoprep/optimizer.hpp"
#include "echoprep/targets.hpp"

#include <cmath>
#include <numbers>

using namespace echoprep;

namespace {

// Composite Simpson rule on [a, b].
template <class F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("spectral density normalization") {
  NoiseModel m;
  m.tau_c = 2.5;
  m.sigma = 0.3;
  m.f_max = 4.0 / m.tau_c;
  CHECK(psd(0.0, m) == doctest::Approx(m.amplitude()));
  CHECK(psd(1.0 / m.tau_c, m) == doctest::Approx(0.5 * m.amplitude()));
  CHECK(m.amplitude() / (m.sigma * m.sigma * m.tau_c) == doctest::Approx(0.49678).epsilon(1e-4));
  const double integral = 2.0 * simpson([&](double f) { return psd(f, m); }, 0.0, 50.0 / m.tau_c, 200000);
  CHECK(integral == doctest::Approx(m.sigma * m.sigma).epsilon(1e-8));
}

TEST_CASE("series variance matches sigma^2") {
  const auto m = NoiseModel::with_defaults(0.7, 0.2, 5.0);
  m.validate();
  CHECK(m.series_variance() == doctest::Approx(0.04).epsilon(0.01));
  NoiseModel bad = m;
  bad.f_max = 1.0 / m.tau_c;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("synthesized series statistics") {
  const double t = 4.0;
  const auto m = NoiseModel::with_defaults(0.4, 0.5, t);
  std::vector<double> times;
  for (int j = 0; j < 20; ++j) times.push_back((j + 0.5) * t / 20);
  const int reps = 1000;
  std::vector<double> per(reps);
  for (int r = 0; r < reps; ++r) {
    const auto h = synthesize(m, t, times, 1000 + r);
    double s = 0.0;
    for (double x : h) s += x * x;
    per[r] = s / h.size();
  }
  double mean = 0.0, var = 0.0;
  for (double x : per) mean += x;
  mean /= reps;
  for (double x : per) var += (x - mean) * (x - mean);
  const double se = std::sqrt(var / (reps - 1) / reps);
  CHECK(std::abs(mean - 0.25) < 3.0 * se);
  CHECK(synthesize(m, t, times, 5) == synthesize(m, t, times, 5));
}

TEST_CASE("zero amplitude and quasi-static limits") {
  std::vector<double> times = {0.0, 0.5, 1.0};
  for (double x : synthesize(NoiseModel::with_defaults(1.0, 0.0, 1.0), 1.0, times, 1)) CHECK(x == 0.0);
  const double t = 3.0;
  const auto slow = NoiseModel::with_defaults(100.0 * t, 1.0, t);
  std::vector<double> grid;
  for (int j = 0; j <= 100; ++j) grid.push_back(t * j / 100.0);
  // Mean over realizations of the largest drift within one realization.
  double drift = 0.0;
  for (int r = 0; r < 200; ++r) {
    const auto h = synthesize(slow, t, grid, r);
    double worst = 0.0;
    for (double x : h) worst = std::max(worst, std::abs(x - h[0]));
    drift += worst / 200;
  }
  CHECK(drift < 0.05);
}

TEST_CASE("Gauss-Hermite quadrature integrates gaussian moments") {
  std::vector<double> x, w;
  gauss_hermite_normal(10, x, w);
  double m0 = 0, m2 = 0, m4 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    m0 += w[i];
    m2 += w[i] * x[i] * x[i];
    m4 += w[i] * std::pow(x[i], 4);
  }
  CHECK(m0 == doctest::Approx(1.0));
  CHECK(m2 == doctest::Approx(1.0));
  CHECK(m4 == doctest::Approx(3.0));
}

TEST_CASE("benchmark without noise equals the noiseless infidelity") {
  Model m(IsingParams{4, 1.0, IsingPerturbation::Z});
  const auto p = ControlProtocol::linear(3.0, 30);
  NoiseBenchmarkOptions opt;
  opt.sigma = 0.0;
  opt.n_realizations = 5;
  const auto b = noise_benchmark(m, ghz_plus(4), {{"linear", p}}, {0.3, 3.0}, opt);
  const double clean = cost(m, p, sample_disorder(m, 0.0, 1, 0), ghz_plus(4));
  REQUIRE(b.rows.size() == 2);
  for (const auto& r : b.rows) {
    CHECK(r.mean_infidelity == doctest::Approx(clean).epsilon(1e-12));
    CHECK(r.n_ok == 5);
  }
  CHECK(b.static_reference[0].mean_infidelity == doctest::Approx(clean).epsilon(1e-12));
}

TEST_CASE("slow noise approaches the static average") {
  Model m(IsingParams{4, 1.0, IsingPerturbation::Z});
  const auto p = ControlProtocol::linear(3.0, 30);
  NoiseBenchmarkOptions opt;
  opt.sigma = 0.05;
  opt.n_realizations = 400;
  const auto b = noise_benchmark(m, ghz_plus(4), {{"linear", p}}, {300.0}, opt);
  const double excess = b.rows[0].mean_infidelity - b.static_reference[0].noiseless_infidelity;
  const double static_excess = b.static_reference[0].mean_infidelity - b.static_reference[0].noiseless_infidelity;
  CHECK(excess == doctest::Approx(static_excess).epsilon(0.2));
}
