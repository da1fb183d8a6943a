#include "doctest.h"
#include "echoprep/error.hpp"
#include "echoprep/models.hpp"
#include "echoprep/propagator.hpp"
#include "support/dense.hpp"

#include <cstdio>
#include <random>

using namespace echoprep;

namespace {

dense::Mat to_dense(const MatrixFreeHamiltonian& h) {
  const std::size_t d = h.dim();
  dense::Mat m(d, d);
  std::vector<cplx> e(d), out(d);
  for (std::size_t c = 0; c < d; ++c) {
    std::fill(e.begin(), e.end(), cplx{});
    e[c] = 1.0;
    h.apply(e, out);
    for (std::size_t r = 0; r < d; ++r) m(r, c) = out[r];
  }
  return m;
}

std::vector<dense::Point> points(const std::vector<Vec2>& p) {
  std::vector<dense::Point> out;
  for (auto v : p) out.push_back({v.x, v.y});
  return out;
}

}  // namespace

TEST_CASE("Ising Hamiltonian matches the dense reference for every perturbation") {
  const int n = 5;
  for (const std::string kind : {"Z", "ZZZ", "X", "XX"}) {
    Model m(IsingParams{n, 1.0, parse_ising_perturbation(kind)});
    MatrixFreeHamiltonian h;
    for (double s : {0.0, 0.3, 0.5, 1.0}) {
      m.instantaneous(s, 1.0, m.with_field(0.07), h);
      CHECK((to_dense(h) - dense::ising(n, s, 0.07, kind)).norm() < 1e-12);
    }
  }
}

TEST_CASE("control derivatives match the analytic and finite-difference values") {
  Model m(IsingParams{4, 1.0, IsingPerturbation::Z});
  MatrixFreeHamiltonian dh;
  for (double s : {0.1, 0.5, 0.9}) {
    m.control_derivative(s, dh);
    CHECK((to_dense(dh) - dense::ising_ds(4, s)).norm() < 1e-12);
  }
  const Geometry g = build_geometry(GeometryKind::ladder, std::vector<int>{3, 2});
  RydbergParams rp;
  rp.positions = g.positions;
  rp.symmetry = g.symmetry;
  Model r(rp);
  MatrixFreeHamiltonian hp, hm;
  const double s = 0.4, d = 1e-6;
  r.instantaneous(s + d, 1.0, r.unperturbed(), hp);
  r.instantaneous(s - d, 1.0, r.unperturbed(), hm);
  r.control_derivative(s, dh);
  CHECK(((to_dense(hp) - to_dense(hm)) / (2 * d) - to_dense(dh)).norm() < 1e-6);
}

TEST_CASE("Rydberg Hamiltonian matches the dense reference") {
  const Geometry g = build_geometry(GeometryKind::ladder, std::vector<int>{3, 2});
  RydbergParams rp;
  rp.positions = g.positions;
  rp.symmetry = g.symmetry;
  Model m(rp);
  MatrixFreeHamiltonian h;
  for (double s : {0.0, 0.25, 1.0}) {
    for (double w : {0.3, 1.0}) {
      m.instantaneous(s, w, m.unperturbed(), h);
      const double delta = -1.0 + 4.0 * s;
      CHECK(m.detuning(s) == doctest::Approx(delta));
      CHECK((to_dense(h) - dense::rydberg(points(g.positions), 1.15, 1.0, delta, w)).norm() < 1e-10);
    }
  }
  // Displaced atoms: the perturbed Hamiltonian uses the displaced positions.
  std::vector<Vec2> dx(g.positions.size());
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 0.02);
  std::vector<Vec2> moved = g.positions;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    dx[i] = {gauss(rng), gauss(rng)};
    moved[i].x += dx[i].x;
    moved[i].y += dx[i].y;
  }
  m.instantaneous(0.5, 1.0, m.with_displacement(dx), h);
  CHECK((to_dense(h) - dense::rydberg(points(moved), 1.15, 1.0, 1.0, 1.0)).norm() < 1e-10);
}

TEST_CASE("interaction matrix and truncation") {
  const std::vector<Vec2> pos = {{0, 0}, {1, 0}, {2, 0}};
  const auto u = interaction_matrix(pos, 1.15);
  CHECK(u[0] == 0.0);
  CHECK(u[1] == doctest::Approx(std::pow(1.15, 6)));
  CHECK(u[2] == doctest::Approx(std::pow(1.15 / 2.0, 6)));
  CHECK(u[1] == u[3]);
  const auto t = interaction_matrix(pos, 1.15, 1.5);
  CHECK(t[2] == 0.0);
  CHECK(t[1] == u[1]);
  CHECK_THROWS_AS(interaction_matrix(std::vector<Vec2>{{0, 0}, {0, 0}}, 1.0), InvalidArgument);
}

TEST_CASE("geometries") {
  const Geometry sq = build_geometry(GeometryKind::square, std::vector<int>{4, 4});
  CHECK(sq.positions.size() == 16);
  CHECK(sq.positions[1].x == 1.0);
  CHECK(sq.positions[4].y == 1.0);
  const auto labels = sublattice_labels(sq.positions);
  CHECK(labels[0] != labels[1]);
  CHECK(labels[0] != labels[4]);
  CHECK(labels[0] == labels[5]);
  const Geometry ring = build_geometry(GeometryKind::ring, std::vector<int>{6});
  CHECK(std::hypot(ring.positions[0].x - ring.positions[1].x, ring.positions[0].y - ring.positions[1].y) ==
        doctest::Approx(1.0));
  CHECK(ring.symmetry[5] == 0);
  CHECK_THROWS_AS(sublattice_labels(build_geometry(GeometryKind::ring, std::vector<int>{3}).positions),
                  InvalidArgument);
}

TEST_CASE("geometry files round-trip") {
  const Geometry g = build_geometry(GeometryKind::ladder, std::vector<int>{4, 2});
  const std::string path = "test_geometry_roundtrip.txt";
  write_geometry(path, g.positions);
  const auto back = read_geometry(path);
  REQUIRE(back.size() == g.positions.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].x == g.positions[i].x);
    CHECK(back[i].y == g.positions[i].y);
  }
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_geometry("does/not/exist.txt"), IoError);
}

TEST_CASE("displacement perturbation is the normalized interaction change") {
  const std::vector<Vec2> pos = {{0, 0}, {1, 0}};
  const std::vector<Vec2> dx = {{0.0, 0.0}, {0.01, 0.0}};
  const auto op = displacement_perturbation(pos, dx, 1.15, 0.01);
  const double expect = std::pow(1.15, 6) * (std::pow(1.01, -6) - 1.0);
  CHECK(op.coefficients[1] == doctest::Approx(expect));
  CHECK(op.scale == doctest::Approx(100.0));
  const auto d = op.diagonal();
  CHECK(d[3] == doctest::Approx(100.0 * expect));
  CHECK(d[1] == 0.0);
}

TEST_CASE("Ising ensembles are symmetric grids") {
  Model m(IsingParams{4, 1.0, IsingPerturbation::Z});
  const auto e = sample_disorder(m, 0.003, 5, 1);
  REQUIRE(e.size() == 5);
  CHECK(e.fields[0] == doctest::Approx(-0.003));
  CHECK(e.fields[2] == 0.0);
  CHECK(e.fields[4] == -e.fields[0]);
  CHECK(sample_disorder(m, 0.0, 7, 1).size() == 1);
  CHECK(sample_disorder(m, 0.01, 1, 1).fields[0] == 0.0);
  CHECK_THROWS_AS(sample_disorder(m, -1.0, 3, 1), InvalidArgument);
}

TEST_CASE("Rydberg ensembles are reproducible from the master seed") {
  RydbergParams rp;
  rp.positions = build_geometry(GeometryKind::ladder, std::vector<int>{2, 2}).positions;
  Model m(rp);
  const auto a = sample_disorder(m, 0.01, 4, 42);
  const auto b = sample_disorder(m, 0.01, 4, 42);
  const auto c = sample_disorder(m, 0.01, 4, 43);
  CHECK(a.displacements[3][1].x == b.displacements[3][1].x);
  CHECK(a.displacements[3][1].x != c.displacements[3][1].x);
  // A longer ensemble extends a shorter one.
  CHECK(sample_disorder(m, 0.01, 6, 42).displacements[2][0].y == a.displacements[2][0].y);
}

TEST_CASE("Rabi window") {
  const double t = 10.0;
  CHECK(window(0.0, t, 0.25) == doctest::Approx(0.0));
  CHECK(window(1.25, t, 0.25) == doctest::Approx(0.5));
  CHECK(window(2.5, t, 0.25) == 1.0);
  CHECK(window(5.0, t, 0.25) == 1.0);
  CHECK(window(10.0, t, 0.25) == doctest::Approx(0.0));
  CHECK(window(8.0, t, 0.25) == doctest::Approx(window(2.0, t, 0.25)));
  CHECK_THROWS_AS(window(11.0, t, 0.25), InvalidArgument);
}

TEST_CASE("excitation number and parity of perturbations") {
  Model m(IsingParams{3, 1.0, IsingPerturbation::Z});
  CHECK(m.perturbation_is_odd());
  CHECK_FALSE(Model(IsingParams{3, 1.0, IsingPerturbation::XX}).perturbation_is_odd());
  CHECK(Model(IsingParams{3, 1.0, IsingPerturbation::ZZZ}).perturbation_is_odd());
  const StateVector plus = StateVector::product_plus(3);
  std::vector<cplx> out(8);
  m.apply_excitation_number(plus.data(), out);
  CHECK(std::abs(inner(plus.data(), out)) < 1e-14);
  const StateVector zero(3);
  m.apply_excitation_number(zero.data(), out);
  CHECK(inner(zero.data(), out).real() == doctest::Approx(1.5));
}

TEST_CASE("model validation") {
  CHECK_THROWS_AS(Model(IsingParams{1, 1.0, IsingPerturbation::Z}), InvalidArgument);
  CHECK_THROWS_AS(Model(IsingParams{4, -1.0, IsingPerturbation::Z}), InvalidArgument);
  RydbergParams rp;
  CHECK_THROWS_AS(Model{rp}, InvalidArgument);
  rp.positions = {{0, 0}, {1, 0}};
  rp.blockade_radius = -1.0;
  CHECK_THROWS_AS(Model{rp}, InvalidArgument);
  CHECK_THROWS_AS(parse_ising_perturbation("Q"), InvalidArgument);
}
