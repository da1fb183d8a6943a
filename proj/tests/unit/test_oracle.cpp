#include "doctest.h"
#include "echoprep/error.hpp"
#include "echoprep/oracle.hpp"
#include "echoprep/targets.hpp"
#include "support/dense.hpp"

#include <numbers>

using namespace echoprep;

namespace {

// Two-level scan with gap(s) and V_10(s) given as functions.
template <class Gap, class V>
SpectralScan synthetic_scan(Gap gap, V v, int points = 401) {
  SpectralScan s;
  s.n_levels = 2;
  s.s = uniform_grid(0.0, 1.0, points);
  for (double x : s.s) {
    s.energies.push_back({0.0, gap(x)});
    s.v_k0.push_back({cplx{}, cplx(v(x), 0.0)});
    s.sectors.push_back({0, 1});
    s.min_overlap.push_back(1.0);
  }
  return s;
}

}  // namespace

TEST_CASE("analytic matrix elements at the end points") {
  for (int n : {4, 5, 6, 8}) {
    Model m(IsingParams{n, 1.0, IsingPerturbation::Z});
    const auto scan = spectral_scan(m, {0.0, 0.5, 1.0});
    CHECK(scan.v_k0[0][1].real() == doctest::Approx(std::sqrt(double(n))).epsilon(1e-10));
    CHECK(std::abs(scan.v_k0[2][1]) == doctest::Approx(double(n)).epsilon(1e-10));
    CHECK(scan.gap(2, 1) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(scan.sectors[0][1] == 1);
  }
}

TEST_CASE("scans are gauge continuous") {
  Model m(IsingParams{6, 1.0, IsingPerturbation::Z});
  const auto scan = spectral_scan(m, uniform_grid(0.0, 1.0, 51));
  for (std::size_t i = 1; i < scan.s.size(); ++i) {
    CHECK(scan.min_overlap[i] > 0.9);
    CHECK(std::abs(scan.v_k0[i][1] - scan.v_k0[i - 1][1]) < 0.5);
    CHECK(std::abs(scan.v_k0[i][1].imag()) < 1e-8);
  }
  CHECK(scan.gap_at(0.25, 1) == doctest::Approx(0.5 * (scan.gap(12, 1) + scan.gap(13, 1))));
  CHECK_THROWS_AS(scan.gap_at(1.5, 1), InvalidArgument);
  CHECK(scan.gap_at(1.5, 1, true) == scan.gap(50, 1));
}

TEST_CASE("constant coupling without a gap gives eps^2 T^2") {
  const auto scan = synthetic_scan([](double) { return 0.0; }, [](double) { return 1.0; });
  const auto p = ControlProtocol::linear(3.0, 60);
  CHECK(firstorder_infidelity(p, scan, 0.1) == doctest::Approx(0.01 * 9.0).epsilon(1e-12));
  OracleOptions ordered;
  ordered.ordered_only = true;
  CHECK(firstorder_infidelity(p, scan, 0.1, ordered) == doctest::Approx(0.01 * 2.25).epsilon(1e-12));
}

TEST_CASE("a constant gap gives the sinc form") {
  const double gap = 2.0, t = 5.0;
  const auto scan = synthetic_scan([&](double) { return gap; }, [](double) { return 1.0; });
  const auto p = ControlProtocol::linear(t, 4000);
  const double expect = std::pow(2.0 * std::sin(gap * t / 2.0) / gap, 2);
  CHECK(firstorder_infidelity(p, scan, 1.0) == doctest::Approx(expect).epsilon(1e-5));
}

TEST_CASE("first-order oracle tracks exact dynamics of a slow ramp at small eps") {
  const int n = 6;
  Model m(IsingParams{n, 1.0, IsingPerturbation::Z});
  const auto scan = spectral_scan(m, uniform_grid(0.0, 1.0, 201));
  const auto p = ControlProtocol::linear(3.2 * n, 400);
  const double eps = 1e-4;
  DisorderEnsemble zero = sample_disorder(m, 0.0, 1, 0);
  const double base = cost(m, p, zero, ghz_plus(n));
  DisorderEnsemble e;
  e.fields = {eps};
  CostOptions plain;
  plain.fold_symmetric = false;
  const double exact = cost(m, p, e, ghz_plus(n), plain) - base;
  const double oracle = firstorder_infidelity(p, scan, eps);
  CHECK(std::abs(exact - oracle) / oracle < 0.03);
}

TEST_CASE("piecewise protocol family") {
  CHECK(piecewise_value(0.0, 3.0, 0.8, 0.2) == 0.0);
  CHECK(piecewise_value(1.0, 3.0, 0.8, 0.2) == doctest::Approx(0.8));
  CHECK(piecewise_value(2.0, 3.0, 0.8, 0.2) == doctest::Approx(0.2));
  CHECK(piecewise_value(3.0, 3.0, 0.8, 0.2) == doctest::Approx(1.0));
  const auto p = piecewise_protocol(3.0, 0.8, 0.2, 30);
  CHECK(p.n_steps() == 30);
  CHECK(p.values[14] == doctest::Approx(piecewise_value(p.time(14), 3.0, 0.8, 0.2)));
  CHECK_THROWS_AS(piecewise_protocol(3.0, 0.5, 0.5, 2), InvalidArgument);
}

TEST_CASE("linear ramp has one ordered segment and no interference") {
  const auto scan = synthetic_scan([](double s) { return s < 0.5 ? 1.0 : 0.0; }, [](double) { return 1.0; });
  const auto p = ControlProtocol::linear(4.0, 40);
  const auto r = echo_conditions(p, scan, 0.5);
  CHECK(r.crossing_times.size() == 1);
  CHECK(r.crossing_times[0] == doctest::Approx(2.0));
  CHECK(r.amplitudes.size() == 1);
  CHECK(r.phases.empty());
  CHECK(r.amplitudes[0].real() == doctest::Approx(2.0));
  CHECK(r.predicted_coefficient == doctest::Approx(4.0));
}

TEST_CASE("echo interference cancels at alpha = pi with equal amplitudes") {
  // Gapless ordered phase, unit gap in the trivial phase.
  const auto scan = synthetic_scan([](double s) { return s > 0.5 ? 0.0 : 1.0; }, [](double) { return 1.0; });
  // Up, down, up, with ordered stretches of equal duration and a trivial
  // stretch of duration pi.
  ControlProtocol p;
  const int n = 3000;
  const double seg = 1.0, dip = std::numbers::pi, t = 2 * seg + dip + 2.0;
  p.total_time = t;
  p.values.resize(n);
  for (int j = 0; j < n; ++j) {
    const double x = p.time(j);
    double s;
    if (x < 1.0) s = 0.2;                       // trivial lead-in
    else if (x < 1.0 + seg) s = 0.9;            // ordered II
    else if (x < 1.0 + seg + dip) s = 0.2;      // trivial III
    else if (x < 1.0 + 2 * seg + dip) s = 0.9;  // ordered IV
    else s = 0.2;
    p.values[j] = s;
  }
  // Ends in the trivial phase; the last trivial stretch only adds a global phase.
  const auto r = echo_conditions(p, scan, 0.5);
  REQUIRE(r.amplitudes.size() == 2);
  REQUIRE(r.phases.size() == 1);
  CHECK(r.phases[0] == doctest::Approx(std::numbers::pi).epsilon(1e-3));
  CHECK(r.predicted_coefficient < 1e-5);
  OracleOptions ordered;
  ordered.ordered_only = true;
  CHECK(firstorder_infidelity(p, scan, 1.0, ordered) == doctest::Approx(r.predicted_coefficient).epsilon(1e-6));
}

TEST_CASE("landscape on a coarse grid") {
  Model m(IsingParams{4, 1.0, IsingPerturbation::Z});
  const auto scan = spectral_scan(m, uniform_grid(0.0, 1.0, 101));
  LandscapeOptions opt;
  opt.n_grid = 5;
  opt.n_steps = 30;
  const auto e = sample_disorder(m, 0.01, 2, 0);
  const auto l = landscape(m, 3.2, e, ghz_plus(4), scan, opt);
  CHECK(l.n() == 5);
  CHECK(l.cost.size() == 25);
  double lo = 1.0;
  for (double c : l.cost) lo = std::min(lo, c);
  CHECK(l.min_cost == lo);
  // Protocols with s_II <= s_c never enter the ordered phase early.
  CHECK(std::isnan(l.phase[0]));
}
