#pragma once

// Dense reference operators built from Kronecker products of 2x2 matrices,
// independent of the matrix-free kernels under test. Site j is the j-th least
// significant bit of the basis index.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <utility>
#include <vector>

namespace dense {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat single(char op) {
  Mat m(2, 2);
  switch (op) {
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    case 'N': m << 0, 0, 0, 1; break;
    default: m = Mat::Identity(2, 2);
  }
  return m;
}

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Product of single-site operators; ops[j] acts on site j ('I' for identity).
inline Mat string_op(const std::vector<char>& ops) {
  Mat out = Mat::Identity(1, 1);
  for (int j = static_cast<int>(ops.size()) - 1; j >= 0; --j) out = kron(out, single(ops[j]));
  return out;
}

inline Mat site_op(int n, std::vector<std::pair<int, char>> factors) {
  std::vector<char> ops(n, 'I');
  for (auto [site, op] : factors) ops[site] = op;
  return string_op(ops);
}

inline Mat zeros(int n) { return Mat::Zero(1 << n, 1 << n); }

inline Mat sum_x(int n) {
  Mat m = zeros(n);
  for (int j = 0; j < n; ++j) m += site_op(n, {{j, 'X'}});
  return m;
}

inline Mat sum_zz(int n) {
  Mat m = zeros(n);
  for (int j = 0; j < n; ++j) m += site_op(n, {{j, 'Z'}, {(j + 1) % n, 'Z'}});
  return m;
}

// Sum over sites of the named perturbation on the periodic chain.
inline Mat ising_perturbation(int n, const std::string& kind) {
  Mat m = zeros(n);
  for (int j = 0; j < n; ++j) {
    if (kind == "Z") m += site_op(n, {{j, 'Z'}});
    if (kind == "X") m += site_op(n, {{j, 'X'}});
    if (kind == "XX") m += site_op(n, {{j, 'X'}, {(j + 1) % n, 'X'}});
    if (kind == "ZZZ") m += site_op(n, {{j, 'Z'}, {(j + 1) % n, 'Z'}, {(j + 2) % n, 'Z'}});
  }
  return m;
}

inline Mat ising(int n, double s, double eps = 0.0, const std::string& kind = "Z", double j0 = 1.0) {
  const double a = 0.5 * std::numbers::pi * s;
  return -j0 * std::sin(a) * sum_zz(n) - j0 * std::cos(a) * sum_x(n) + eps * ising_perturbation(n, kind);
}

inline Mat ising_ds(int n, double s, double j0 = 1.0) {
  const double a = 0.5 * std::numbers::pi * s;
  return -j0 * 0.5 * std::numbers::pi * std::cos(a) * sum_zz(n) +
         j0 * 0.5 * std::numbers::pi * std::sin(a) * sum_x(n);
}

struct Point {
  double x, y;
};

// (Omega w / 2) sum X - Delta sum n + sum_{j<k} Omega (R_b / r_jk)^6 n_j n_k
inline Mat rydberg(const std::vector<Point>& pos, double rb, double omega, double delta, double w) {
  const int n = static_cast<int>(pos.size());
  Mat m = 0.5 * omega * w * sum_x(n);
  for (int j = 0; j < n; ++j) m -= delta * site_op(n, {{j, 'N'}});
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      const double r = std::hypot(pos[j].x - pos[k].x, pos[j].y - pos[k].y);
      m += omega * std::pow(rb / r, 6) * site_op(n, {{j, 'N'}, {k, 'N'}});
    }
  }
  return m;
}

inline Mat expm_herm(const Mat& h, double dt) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  Vec ph(es.eigenvalues().size());
  for (int i = 0; i < ph.size(); ++i) ph(i) = std::exp(cplx(0.0, -dt * es.eigenvalues()(i)));
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

inline Vec plus_state(int n) { return Vec::Constant(1 << n, cplx(std::pow(2.0, -0.5 * n), 0.0)); }

inline Vec ghz(int n) {
  Vec v = Vec::Zero(1 << n);
  v(0) = v((1 << n) - 1) = 1.0 / std::sqrt(2.0);
  return v;
}

inline Vec to_vec(const std::vector<cplx>& v) { return Eigen::Map<const Vec>(v.data(), v.size()); }

template <class Span>
inline Vec span_vec(const Span& s) {
  Vec v(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) v(i) = s[i];
  return v;
}

}  // namespace dense
