#include "doctest.h"
#include "echoprep/eigensolver.hpp"
#include "echoprep/error.hpp"
#include "echoprep/models.hpp"
#include "echoprep/propagator.hpp"
#include "support/dense.hpp"

using namespace echoprep;

namespace {

LinearMap wrap(const dense::Mat& m) {
  return [&m](std::span<const cplx> in, std::span<cplx> out) {
    Eigen::Map<dense::Vec>(out.data(), out.size()) = m * Eigen::Map<const dense::Vec>(in.data(), in.size());
  };
}

}  // namespace

TEST_CASE("lowest eigenpairs match dense diagonalization") {
  const int n = 8;
  const dense::Mat h = dense::ising(n, 0.37, 0.01, "Z");
  Eigen::SelfAdjointEigenSolver<dense::Mat> es(h);
  const auto pairs = lowest_eigenpairs(wrap(h), 1u << n, 4);
  REQUIRE(pairs.size() == 4);
  for (int k = 0; k < 4; ++k) {
    CHECK(pairs[k].energy == doctest::Approx(es.eigenvalues()(k)).epsilon(1e-10));
    CHECK(pairs[k].residual < 1e-8);
  }
}

TEST_CASE("symmetry sectors label nearly degenerate levels") {
  const int n = 8;
  Model m(IsingParams{n, 1.0, IsingPerturbation::Z});
  MatrixFreeHamiltonian h;
  m.instantaneous(0.9, 1.0, m.unperturbed(), h);
  EigenOptions opt;
  opt.symmetry = m.symmetry();
  const auto pairs = lowest_eigenpairs(as_linear_map(h), m.dim(), 2, opt);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].sector == 0);
  CHECK(pairs[1].sector == 1);
  Eigen::SelfAdjointEigenSolver<dense::Mat> es(dense::ising(n, 0.9));
  CHECK(pairs[0].energy == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-10));
  CHECK(pairs[1].energy == doctest::Approx(es.eigenvalues()(1)).epsilon(1e-10));
}

TEST_CASE("exactly degenerate levels at the classical point") {
  const int n = 6;
  Model m(IsingParams{n, 1.0, IsingPerturbation::Z});
  MatrixFreeHamiltonian h;
  m.instantaneous(1.0, 1.0, m.unperturbed(), h);
  EigenOptions opt;
  opt.symmetry = m.symmetry();
  const auto pairs = lowest_eigenpairs(as_linear_map(h), m.dim(), 2, opt);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].energy == doctest::Approx(-6.0));
  CHECK(pairs[1].energy == doctest::Approx(-6.0));
  CHECK(pairs[0].sector == 0);
  CHECK(pairs[1].sector == 1);
  // Symmetric combination of the two ordered states.
  CHECK(std::abs(std::abs(pairs[0].vector[0]) - 1.0 / std::sqrt(2.0)) < 1e-8);
}

TEST_CASE("small spaces return fewer pairs") {
  dense::Mat h(2, 2);
  h << 1, 0.5, 0.5, -1;
  const auto pairs = lowest_eigenpairs(wrap(h), 2, 5);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].energy == doctest::Approx(-std::sqrt(1.25)));
  CHECK_THROWS_AS(lowest_eigenpairs(wrap(h), 2, 0), InvalidArgument);
}

TEST_CASE("translation constraint keeps the momentum-zero sector") {
  const int n = 6;
  Model m(IsingParams{n, 1.0, IsingPerturbation::Z});
  MatrixFreeHamiltonian h;
  m.instantaneous(0.3, 1.0, m.unperturbed(), h);
  EigenOptions opt;
  opt.symmetry = m.symmetry();
  opt.constraint = SymmetryOperator::site_permutation({1, 2, 3, 4, 5, 0});
  const auto pairs = lowest_eigenpairs(as_linear_map(h), m.dim(), 2, opt);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].sector == 0);
  CHECK(pairs[1].sector == 1);
  CHECK(pairs[0].residual < 1e-8);
  CHECK(pairs[1].residual < 1e-8);
}
