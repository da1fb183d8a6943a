#include "echoprep/krylov.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "echoprep/error.hpp"

namespace echoprep {

std::vector<cplx>& KrylovWorkspace::buffer(std::size_t slot, std::size_t size) {
  auto& b = buffers_.at(slot);
  if (b.size() < size) b.resize(size);
  return b;
}

namespace {

enum Slot : std::size_t { kBasis = 0, kBackup = 1, kAugTemp = 2, kAugVector = 3 };

void axpy(cplx a, const cplx* x, cplx* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double norm_of(const cplx* x, std::size_t n) { return norm(std::span<const cplx>(x, n)); }

cplx dot(const cplx* a, const cplx* b, std::size_t n) {
  return inner(std::span<const cplx>(a, n), std::span<const cplx>(b, n));
}

struct Attempt {
  bool ok = false;
  int dimension = 0;
  double error = 0.0;
};

// One Lanczos exponential step; writes x only on success.
Attempt lanczos_try(const LinearMap& h, double dt, std::span<cplx> x, const KrylovOptions& opt,
                    KrylovWorkspace& ws) {
  const std::size_t n = x.size();
  const double beta0 = norm(x);
  if (beta0 == 0.0 || dt == 0.0) return {true, 0, 0.0};
  const int max_dim = std::max(1, opt.max_dim);
  auto& basis = ws.buffer(kBasis, static_cast<std::size_t>(max_dim + 1) * n);
  cplx* v = basis.data();
  for (std::size_t i = 0; i < n; ++i) v[i] = x[i] / beta0;

  std::vector<double> alpha, beta;
  double scale = 0.0;
  for (int j = 0; j < max_dim; ++j) {
    cplx* vj = v + j * n;
    cplx* w = v + (j + 1) * n;
    h(std::span<const cplx>(vj, n), std::span<cplx>(w, n));
    const double a = dot(vj, w, n).real();
    axpy(-a, vj, w, n);
    if (j > 0) axpy(-beta[j - 1], v + (j - 1) * n, w, n);
    // Local reorthogonalization against the two most recent vectors.
    const cplx c0 = dot(vj, w, n);
    axpy(-c0, vj, w, n);
    if (j > 0) axpy(-dot(v + (j - 1) * n, w, n), v + (j - 1) * n, w, n);
    const double b = norm_of(w, n);
    alpha.push_back(a + c0.real());
    beta.push_back(b);
    scale = std::max(scale, std::abs(alpha.back()) + b + (j > 0 ? beta[j - 1] : 0.0));
    const int m = j + 1;
    const bool happy = b <= 1e-14 * std::max(scale, 1e-300);
    if (!happy && m < 3 && m < max_dim) {
      for (std::size_t i = 0; i < n; ++i) w[i] /= b;
      continue;
    }
    Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(alpha.data(), m);
    Eigen::VectorXd sub = m > 1 ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(beta.data(), m - 1))
                                : Eigen::VectorXd();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    const auto& q = es.eigenvectors();
    const auto& lam = es.eigenvalues();
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(m);
    for (int k = 0; k < m; ++k) {
      const cplx phase = std::exp(cplx{0.0, -dt * lam(k)}) * q(0, k);
      for (int i = 0; i < m; ++i) y(i) += q(i, k) * phase;
    }
    const double err = happy ? 0.0 : beta0 * b * std::abs(y(m - 1));
    if (happy || err <= opt.tol) {
      std::fill(x.begin(), x.end(), cplx{0.0, 0.0});
      for (int i = 0; i < m; ++i) axpy(beta0 * y(i), v + i * n, x.data(), n);
      return {true, m, err};
    }
    if (m == max_dim) return {false, m, err};
    for (std::size_t i = 0; i < n; ++i) w[i] /= b;
  }
  return {false, max_dim, 0.0};
}

// One Arnoldi step for exp(-i dt A) x with general (non-Hermitian) A.
Attempt arnoldi_try(const LinearMap& a_op, double dt, std::span<cplx> x, const KrylovOptions& opt,
                    KrylovWorkspace& ws) {
  const std::size_t n = x.size();
  const double beta0 = norm(x);
  if (beta0 == 0.0 || dt == 0.0) return {true, 0, 0.0};
  const int max_dim = std::max(1, opt.max_dim);
  auto& basis = ws.buffer(kBasis, static_cast<std::size_t>(max_dim + 1) * n);
  cplx* v = basis.data();
  for (std::size_t i = 0; i < n; ++i) v[i] = x[i] / beta0;
  Eigen::MatrixXcd hess = Eigen::MatrixXcd::Zero(max_dim + 1, max_dim);
  double scale = 0.0;
  for (int j = 0; j < max_dim; ++j) {
    cplx* w = v + (j + 1) * n;
    a_op(std::span<const cplx>(v + j * n, n), std::span<cplx>(w, n));
    // Two passes of modified Gram-Schmidt.
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i <= j; ++i) {
        const cplx c = dot(v + i * n, w, n);
        hess(i, j) += c;
        axpy(-c, v + i * n, w, n);
      }
    }
    const double b = norm_of(w, n);
    hess(j + 1, j) = b;
    scale = std::max(scale, hess.col(j).head(j + 2).cwiseAbs().sum());
    const int m = j + 1;
    const bool happy = b <= 1e-14 * std::max(scale, 1e-300);
    if (!happy && m < 3 && m < max_dim) {
      for (std::size_t i = 0; i < n; ++i) w[i] /= b;
      continue;
    }
    const Eigen::MatrixXcd small = (cplx{0.0, -dt} * hess.topLeftCorner(m, m)).eval();
    const Eigen::MatrixXcd e = small.exp();
    const double err = happy ? 0.0 : beta0 * b * std::abs(e(m - 1, 0));
    if (happy || err <= opt.tol) {
      std::fill(x.begin(), x.end(), cplx{0.0, 0.0});
      for (int i = 0; i < m; ++i) axpy(beta0 * e(i, 0), v + i * n, x.data(), n);
      return {true, m, err};
    }
    if (m == max_dim) return {false, m, err};
    for (std::size_t i = 0; i < n; ++i) w[i] /= b;
  }
  return {false, max_dim, 0.0};
}

template <class Try>
KrylovInfo with_splitting(Try&& attempt, double dt, std::span<cplx> x, const KrylovOptions& opt,
                          KrylovWorkspace& ws) {
  if (!std::isfinite(dt)) throw InvalidArgument("Krylov step: non-finite dt");
  if (!(opt.tol > 0.0)) throw InvalidArgument("Krylov step: tolerance must be positive");
  auto& backup = ws.buffer(kBackup, x.size());
  std::copy(x.begin(), x.end(), backup.begin());
  double worst = 0.0;
  for (int split = 0; split <= opt.max_splits; ++split) {
    const int parts = 1 << split;
    if (split > 0) std::copy(backup.begin(), backup.begin() + x.size(), x.begin());
    KrylovInfo info;
    info.substeps = parts;
    bool ok = true;
    for (int p = 0; p < parts; ++p) {
      const Attempt a = attempt(dt / parts, x);
      info.dimension = std::max(info.dimension, a.dimension);
      info.error_estimate = std::max(info.error_estimate, a.error);
      if (!a.ok) {
        ok = false;
        worst = a.error;
        break;
      }
    }
    if (ok) return info;
  }
  std::copy(backup.begin(), backup.begin() + x.size(), x.begin());
  throw NumericalError("Krylov exponential did not converge", worst);
}

}  // namespace

KrylovInfo expm_multiply(const LinearMap& h, double dt, std::span<cplx> psi,
                         const KrylovOptions& options, KrylovWorkspace& ws) {
  return with_splitting(
      [&](double step, std::span<cplx> x) { return lanczos_try(h, step, x, options, ws); }, dt, psi,
      options, ws);
}

KrylovInfo step_with_derivative(const LinearMap& h, const LinearMap& dh, double dt,
                                std::span<cplx> psi, std::span<cplx> dpsi, DerivativeMode mode,
                                const KrylovOptions& options, KrylovWorkspace& ws) {
  const std::size_t n = psi.size();
  if (dpsi.size() != n) throw InvalidArgument("step_with_derivative: length mismatch");
  if (mode == DerivativeMode::first_order) {
    KrylovInfo info = expm_multiply(h, dt, psi, options, ws);
    dh(psi, dpsi);
    for (auto& z : dpsi) z *= cplx{0.0, -dt};
    return info;
  }
  // Augmented vector (top, bottom) = (0, psi) under A = [[H, dH], [0, H]].
  auto& aug = ws.buffer(kAugVector, 2 * n);
  std::fill(aug.begin(), aug.begin() + n, cplx{0.0, 0.0});
  std::copy(psi.begin(), psi.end(), aug.begin() + n);
  const LinearMap a_op = [&](std::span<const cplx> in, std::span<cplx> out) {
    auto& tmp = ws.buffer(kAugTemp, n);
    h(in.first(n), out.first(n));
    dh(in.subspan(n, n), std::span<cplx>(tmp.data(), n));
    for (std::size_t i = 0; i < n; ++i) out[i] += tmp[i];
    h(in.subspan(n, n), out.subspan(n, n));
  };
  std::span<cplx> x(aug.data(), 2 * n);
  const KrylovInfo info = with_splitting(
      [&](double step, std::span<cplx> y) { return arnoldi_try(a_op, step, y, options, ws); }, dt, x,
      options, ws);
  std::copy(aug.begin(), aug.begin() + n, dpsi.begin());
  std::copy(aug.begin() + n, aug.begin() + 2 * n, psi.begin());
  return info;
}

}  // namespace echoprep
