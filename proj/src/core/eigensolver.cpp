#include "echoprep/eigensolver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "echoprep/error.hpp"

namespace echoprep {

namespace {

using Projector = std::function<void(std::span<cplx>)>;

void axpy(cplx a, std::span<const cplx> x, std::span<cplx> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void scale(std::span<cplx> x, cplx a) {
  for (auto& z : x) z *= a;
}

class Basis {
 public:
  Basis(std::size_t dim, int capacity) : dim_(dim), data_(dim * capacity) {}
  std::span<cplx> operator[](int i) { return {data_.data() + i * dim_, dim_}; }

 private:
  std::size_t dim_;
  std::vector<cplx> data_;
};

// Classical Gram-Schmidt, two passes; returns the accumulated coefficients.
Eigen::VectorXcd orthogonalize(Basis& v, int count, std::span<cplx> w) {
  Eigen::VectorXcd coeff = Eigen::VectorXcd::Zero(count);
  for (int pass = 0; pass < 2; ++pass) {
    for (int i = 0; i < count; ++i) {
      const cplx c = inner(v[i], w);
      coeff(i) += c;
      axpy(-c, v[i], w);
    }
  }
  return coeff;
}

struct SectorResult {
  std::vector<double> energies;
  std::vector<std::vector<cplx>> vectors;
};

// Fresh random direction in the target subspace, orthogonal to v[0..count).
// Returns false when the subspace is exhausted.
bool fresh_direction(std::mt19937_64& rng, const Projector& proj, Basis& v, int count,
                     std::span<cplx> out) {
  std::normal_distribution<double> gauss;
  for (int attempt = 0; attempt < 3; ++attempt) {
    for (auto& z : out) z = cplx{gauss(rng), gauss(rng)};
    const double raw = norm(out);
    proj(out);
    const double n0 = norm(out);
    if (n0 <= 1e-10 * raw) return false;
    scale(out, 1.0 / n0);
    orthogonalize(v, count, out);
    const double n1 = norm(out);
    if (n1 > 1e-6) {
      scale(out, 1.0 / n1);
      return true;
    }
    if (n1 < 1e-12) return false;
  }
  return false;
}

SectorResult solve_sector(const LinearMap& h, std::size_t dim, int k, const Projector& proj,
                          const EigenOptions& opt, std::uint64_t seed) {
  const int requested = opt.max_basis > 0 ? opt.max_basis : std::max(2 * k + 20, 40);
  const int m = static_cast<int>(std::min<std::size_t>(requested, dim));
  Basis v(dim, m + 1);
  std::mt19937_64 rng(seed);
  if (!fresh_direction(rng, proj, v, 0, v[0])) return {};

  Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(m, m);
  std::vector<cplx> w(dim);
  int count = 0;  // processed columns; v[count] is pending
  double last_beta = 0.0;
  bool exhausted = false;
  double spectral_scale = 1.0;

  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    while (count < m) {
      h(v[count], w);
      // Projecting after orthogonalization keeps round-off that left the
      // subspace from being amplified by later steps.
      Eigen::VectorXcd c = orthogonalize(v, count + 1, w);
      proj(w);
      c += orthogonalize(v, count + 1, w);
      for (int i = 0; i <= count; ++i) {
        t(i, count) = c(i);
        t(count, i) = std::conj(c(i));
      }
      t(count, count) = c(count).real();
      spectral_scale = std::max(spectral_scale, std::abs(c(count).real()));
      last_beta = norm(w);
      ++count;
      if (last_beta <= 1e-12 * spectral_scale) {
        // Invariant subspace: Ritz pairs in it are exact.
        last_beta = 0.0;
        if (count == m) break;
        if (!fresh_direction(rng, proj, v, count, v[count])) {
          exhausted = true;
          break;
        }
      } else {
        std::copy(w.begin(), w.end(), v[count].begin());
        scale(v[count], 1.0 / last_beta);
      }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(t.topLeftCorner(count, count));
    const auto& theta = es.eigenvalues();
    const auto& y = es.eigenvectors();
    const int want = std::min(k, count);
    bool converged = true;
    for (int i = 0; i < want; ++i) {
      const double res = last_beta * std::abs(y(count - 1, i));
      if (res > opt.tol * std::max(1.0, std::abs(theta(i)))) converged = false;
    }
    const int keep = converged || exhausted ? want : std::min(count - 1, k + std::max(5, (m - k) / 3));

    // Ritz vectors x_i = V y_i for the kept pairs.
    std::vector<std::vector<cplx>> ritz(keep, std::vector<cplx>(dim, cplx{0.0, 0.0}));
    for (int i = 0; i < keep; ++i) {
      for (int j = 0; j < count; ++j) axpy(y(j, i), v[j], ritz[i]);
    }
    if (converged || exhausted) {
      SectorResult out;
      for (int i = 0; i < keep; ++i) {
        out.energies.push_back(theta(i));
        out.vectors.push_back(std::move(ritz[i]));
      }
      return out;
    }
    if (restart == opt.max_restarts) {
      double worst = 0.0;
      for (int i = 0; i < want; ++i) worst = std::max(worst, last_beta * std::abs(y(count - 1, i)));
      throw NumericalError("Lanczos eigensolver did not converge", worst);
    }
    // Thick restart: [x_0 .. x_{keep-1}, pending residual vector].
    std::vector<cplx> pending(v[count].begin(), v[count].end());
    for (int i = 0; i < keep; ++i) std::copy(ritz[i].begin(), ritz[i].end(), v[i].begin());
    std::copy(pending.begin(), pending.end(), v[keep].begin());
    t.setZero();
    for (int i = 0; i < keep; ++i) t(i, i) = theta(i);
    count = keep;
  }
  throw NumericalError("Lanczos eigensolver did not converge");
}

}  // namespace

std::vector<EigenPair> lowest_eigenpairs(const LinearMap& h, std::size_t dim, int k,
                                         const EigenOptions& options) {
  if (k < 1) throw InvalidArgument("lowest_eigenpairs: k must be >= 1");
  if (dim == 0) throw InvalidArgument("lowest_eigenpairs: empty space");
  if (!(options.tol > 0.0)) throw InvalidArgument("lowest_eigenpairs: tol must be positive");
  for (const auto* s : {&options.symmetry, &options.constraint}) {
    if (*s && hilbert_dim((*s)->n_sites()) != dim) {
      throw InvalidArgument("lowest_eigenpairs: symmetry acts on a different space");
    }
  }
  std::vector<cplx> scratch_a(dim), scratch_b(dim);
  const int n_sectors = options.symmetry ? options.symmetry->order() : 1;
  std::vector<EigenPair> all;
  for (int sector = 0; sector < n_sectors; ++sector) {
    const Projector proj = [&](std::span<cplx> x) {
      if (options.constraint) options.constraint->project(options.constraint_sector, x, scratch_a, scratch_b);
      if (options.symmetry) options.symmetry->project(sector, x, scratch_a, scratch_b);
    };
    const std::uint64_t seed = options.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(sector);
    auto res = solve_sector(h, dim, k, proj, options, seed);
    // A single Krylov sequence sees one copy of each degenerate level; search
    // the complement of the found vectors until nothing lower turns up.
    for (int pass = 1; pass <= k && !res.energies.empty(); ++pass) {
      const double top = res.energies.back();
      const Projector deflated = [&](std::span<cplx> x) {
        proj(x);
        for (int rep = 0; rep < 2; ++rep) {
          for (const auto& u : res.vectors) axpy(-inner(u, x), u, x);
        }
      };
      auto extra = solve_sector(h, dim, k, deflated, options, seed + 7919ULL * pass);
      const double slack = options.tol * std::max(1.0, std::abs(top));
      if (extra.energies.empty() || extra.energies.front() >= top - slack) break;
      for (std::size_t i = 0; i < extra.energies.size(); ++i) {
        res.energies.push_back(extra.energies[i]);
        res.vectors.push_back(std::move(extra.vectors[i]));
      }
      std::vector<std::size_t> order(res.energies.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return res.energies[a] < res.energies[b]; });
      SectorResult merged;
      for (std::size_t i = 0; i < order.size() && i < static_cast<std::size_t>(k); ++i) {
        merged.energies.push_back(res.energies[order[i]]);
        merged.vectors.push_back(std::move(res.vectors[order[i]]));
      }
      res = std::move(merged);
    }
    for (std::size_t i = 0; i < res.energies.size(); ++i) {
      EigenPair p;
      p.energy = res.energies[i];
      p.vector = std::move(res.vectors[i]);
      p.sector = sector;
      all.push_back(std::move(p));
    }
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const EigenPair& a, const EigenPair& b) { return a.energy < b.energy; });
  // Near-degenerate runs are ordered by sector.
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i + 1;
    while (j < all.size() && all[j].energy - all[j - 1].energy <= options.degeneracy_tol) ++j;
    std::stable_sort(all.begin() + i, all.begin() + j,
                     [](const EigenPair& a, const EigenPair& b) { return a.sector < b.sector; });
    i = j;
  }
  if (all.size() > static_cast<std::size_t>(k)) all.resize(k);
  std::vector<cplx> hx(dim);
  for (auto& p : all) {
    h(p.vector, hx);
    double r = 0.0;
    for (std::size_t i = 0; i < dim; ++i) r += std::norm(hx[i] - p.energy * p.vector[i]);
    p.residual = std::sqrt(r);
  }
  return all;
}

}  // namespace echoprep
