#include "echoprep/models.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <queue>
#include <random>
#include <sstream>

#include "echoprep/error.hpp"

namespace echoprep {

std::string to_string(IsingPerturbation p) {
  switch (p) {
    case IsingPerturbation::Z:
      return "Z";
    case IsingPerturbation::ZZZ:
      return "ZZZ";
    case IsingPerturbation::X:
      return "X";
    case IsingPerturbation::XX:
      return "XX";
  }
  return "?";
}

IsingPerturbation parse_ising_perturbation(const std::string& name) {
  if (name == "Z") return IsingPerturbation::Z;
  if (name == "ZZZ") return IsingPerturbation::ZZZ;
  if (name == "X") return IsingPerturbation::X;
  if (name == "XX") return IsingPerturbation::XX;
  throw InvalidArgument("unknown Ising perturbation '" + name + "' (expected Z, ZZZ, X or XX)");
}

std::pair<double, double> ising_couplings(double s, double j0) {
  const double angle = 0.5 * std::numbers::pi * s;
  return {j0 * std::sin(angle), j0 * std::cos(angle)};
}

// --- geometry -------------------------------------------------------------

GeometryKind parse_geometry_kind(const std::string& name) {
  if (name == "chain" || name == "chain_ring") return GeometryKind::chain;
  if (name == "square") return GeometryKind::square;
  if (name == "ladder") return GeometryKind::ladder;
  if (name == "ring") return GeometryKind::ring;
  throw InvalidArgument("unsupported geometry kind '" + name + "'");
}

namespace {

Geometry grid(int m, int n) {
  Geometry g;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < m; ++x) g.positions.push_back({double(x), double(y)});
  }
  const auto index = [m](int x, int y) { return y * m + x; };
  if (n % 2 == 0) {
    g.symmetry.resize(m * n);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < m; ++x) g.symmetry[index(x, y)] = index(x, n - 1 - y);
  } else if (m % 2 == 0) {
    g.symmetry.resize(m * n);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < m; ++x) g.symmetry[index(x, y)] = index(m - 1 - x, y);
  }
  return g;
}

}  // namespace

Geometry build_geometry(GeometryKind kind, std::span<const int> dims) {
  const auto need = [&](std::size_t count) {
    if (dims.size() < count) throw InvalidArgument("geometry needs " + std::to_string(count) + " dims");
    for (std::size_t i = 0; i < count; ++i) {
      if (dims[i] <= 0) throw InvalidArgument("geometry dims must be positive");
    }
  };
  switch (kind) {
    case GeometryKind::chain: {
      need(1);
      return grid(dims[0], 1);
    }
    case GeometryKind::square: {
      need(2);
      return grid(dims[0], dims[1]);
    }
    case GeometryKind::ladder: {
      need(1);
      if (dims.size() > 1 && dims[1] != 2) throw InvalidArgument("ladder geometry has two legs");
      return grid(dims[0], 2);
    }
    case GeometryKind::ring: {
      need(1);
      const int n = dims[0];
      if (n < 3) throw InvalidArgument("ring geometry needs at least 3 sites");
      Geometry g;
      const double radius = 1.0 / (2.0 * std::sin(std::numbers::pi / n));
      for (int j = 0; j < n; ++j) {
        const double phi = 2.0 * std::numbers::pi * j / n;
        g.positions.push_back({radius * std::cos(phi), radius * std::sin(phi)});
        g.symmetry.push_back((j + 1) % n);
      }
      return g;
    }
  }
  throw InvalidArgument("unsupported geometry kind");
}

std::vector<Vec2> read_geometry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open geometry file '" + path + "'");
  std::vector<Vec2> pos;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream row(line);
    long id = 0;
    Vec2 p;
    if (!(row >> id >> p.x >> p.y)) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected 'id x y'");
    }
    if (id != static_cast<long>(pos.size())) {
      throw IoError(path + ":" + std::to_string(line_no) + ": ids must be 0, 1, 2, ...");
    }
    pos.push_back(p);
  }
  return pos;
}

void write_geometry(const std::string& path, std::span<const Vec2> positions) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write geometry file '" + path + "'");
  out << std::setprecision(17);
  for (std::size_t j = 0; j < positions.size(); ++j) {
    out << j << ' ' << positions[j].x << ' ' << positions[j].y << '\n';
  }
}

namespace {

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

std::vector<double> interaction_matrix(std::span<const Vec2> positions, double blockade_radius,
                                       std::optional<double> truncation_radius, double omega0) {
  if (!(blockade_radius > 0.0)) throw InvalidArgument("blockade radius must be positive");
  const std::size_t n = positions.size();
  std::vector<double> u(n * n, 0.0);
  const double rb6 = std::pow(blockade_radius, 6);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = j + 1; k < n; ++k) {
      const double r = distance(positions[j], positions[k]);
      if (r == 0.0) {
        throw InvalidArgument("atoms " + std::to_string(j) + " and " + std::to_string(k) +
                              " coincide");
      }
      if (truncation_radius && r > *truncation_radius) continue;
      const double v = omega0 * rb6 / std::pow(r, 6);
      u[j * n + k] = v;
      u[k * n + j] = v;
    }
  }
  return u;
}

std::vector<int> sublattice_labels(std::span<const Vec2> positions) {
  const std::size_t n = positions.size();
  if (n < 2) throw InvalidArgument("sublattices need at least two sites");
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = j + 1; k < n; ++k) dmin = std::min(dmin, distance(positions[j], positions[k]));
  const double cut = dmin * (1.0 + 1e-6);
  std::vector<int> label(n, -1);
  for (std::size_t root = 0; root < n; ++root) {
    if (label[root] >= 0) continue;
    label[root] = 0;
    std::queue<std::size_t> q;
    q.push(root);
    while (!q.empty()) {
      const auto j = q.front();
      q.pop();
      for (std::size_t k = 0; k < n; ++k) {
        if (k == j || distance(positions[j], positions[k]) > cut) continue;
        if (label[k] < 0) {
          label[k] = 1 - label[j];
          q.push(k);
        } else if (label[k] == label[j]) {
          throw InvalidArgument("geometry is not bipartite on its nearest-neighbor graph");
        }
      }
    }
  }
  return label;
}

// --- perturbations --------------------------------------------------------

OperatorSpec ising_perturbation(int n_sites, IsingPerturbation kind) {
  OperatorSpec spec;
  spec.tag = "V^" + to_string(kind);
  const int l = n_sites;
  for (int j = 0; j < l; ++j) {
    switch (kind) {
      case IsingPerturbation::Z:
        spec.add(1.0, {{j, Pauli::Z}});
        break;
      case IsingPerturbation::X:
        spec.add(1.0, {{j, Pauli::X}});
        break;
      case IsingPerturbation::XX:
        spec.add(1.0, {{j, Pauli::X}, {(j + 1) % l, Pauli::X}});
        break;
      case IsingPerturbation::ZZZ:
        if (l < 3) throw InvalidArgument("ZZZ perturbation needs L >= 3");
        spec.add(1.0, {{(j + l - 1) % l, Pauli::Z}, {j, Pauli::Z}, {(j + 1) % l, Pauli::Z}});
        break;
    }
  }
  return spec;
}

OperatorSpec PairOperator::to_spec() const {
  OperatorSpec spec;
  spec.tag = "displacement";
  for (int j = 0; j < n_sites; ++j) {
    for (int k = j + 1; k < n_sites; ++k) {
      const double c = coefficients[j * n_sites + k];
      if (c != 0.0) spec.add(scale * c, {{j, Pauli::N}, {k, Pauli::N}});
    }
  }
  return spec;
}

std::vector<double> PairOperator::diagonal() const {
  auto d = pair_diagonal(n_sites, coefficients);
  for (auto& v : d) v *= scale;
  return d;
}

std::vector<double> pair_diagonal(int n_sites, std::span<const double> pair_matrix) {
  const std::size_t d = hilbert_dim(n_sites);
  if (pair_matrix.size() != static_cast<std::size_t>(n_sites) * n_sites) {
    throw InvalidArgument("pair matrix has the wrong size");
  }
  std::vector<double> diag(d, 0.0);
  for (Index b = 0; b < d; ++b) {
    double e = 0.0;
    for (int j = 0; j < n_sites; ++j) {
      if (!((b >> j) & 1u)) continue;
      for (int k = j + 1; k < n_sites; ++k) {
        if ((b >> k) & 1u) e += pair_matrix[j * n_sites + k];
      }
    }
    diag[b] = e;
  }
  return diag;
}

PairOperator displacement_perturbation(std::span<const Vec2> positions,
                                       std::span<const Vec2> displacement, double blockade_radius,
                                       double sigma, double omega0,
                                       std::optional<double> truncation_radius) {
  const std::size_t n = positions.size();
  if (displacement.size() != n) throw InvalidArgument("one displacement per atom required");
  if (!(sigma > 0.0)) throw InvalidArgument("displacement operator needs sigma > 0");
  const double rb6 = std::pow(blockade_radius, 6);
  PairOperator op;
  op.n_sites = static_cast<int>(n);
  op.scale = 1.0 / sigma;
  op.coefficients.assign(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(displacement[j].x) || !std::isfinite(displacement[j].y)) {
      throw InvalidArgument("non-finite displacement");
    }
    for (std::size_t k = j + 1; k < n; ++k) {
      const double r0 = distance(positions[j], positions[k]);
      if (truncation_radius && r0 > *truncation_radius) continue;
      const Vec2 a{positions[j].x + displacement[j].x, positions[j].y + displacement[j].y};
      const Vec2 b{positions[k].x + displacement[k].x, positions[k].y + displacement[k].y};
      const double r1 = distance(a, b);
      if (r1 == 0.0) {
        throw InvalidArgument("displaced atoms " + std::to_string(j) + " and " + std::to_string(k) +
                              " coincide");
      }
      const double c = omega0 * (rb6 / std::pow(r1, 6) - rb6 / std::pow(r0, 6));
      op.coefficients[j * n + k] = c;
      op.coefficients[k * n + j] = c;
    }
  }
  return op;
}

std::uint64_t sample_seed(std::uint64_t master_seed, std::uint64_t index) {
  std::uint64_t z = master_seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// --- Hamiltonian action ---------------------------------------------------

void MatrixFreeHamiltonian::apply(std::span<const cplx> in, std::span<cplx> out) const {
  const std::size_t d = dim();
  if (in.size() != d || out.size() != d) throw InvalidArgument("Hamiltonian apply: length mismatch");
  if (diagonal.empty()) {
    std::fill(out.begin(), out.end(), cplx{0.0, 0.0});
  } else {
    for (std::size_t c = 0; c < d; ++c) out[c] = diagonal[c] * in[c];
  }
  if (transverse != 0.0) {
    const double a = transverse;
    for (int j = 0; j < n_sites; ++j) {
      const std::size_t bit = std::size_t{1} << j;
      for (std::size_t base = 0; base < d; base += 2 * bit) {
        cplx* lo = out.data() + base;
        cplx* hi = lo + bit;
        const cplx* ilo = in.data() + base;
        const cplx* ihi = ilo + bit;
        for (std::size_t k = 0; k < bit; ++k) {
          lo[k] += a * ihi[k];
          hi[k] += a * ilo[k];
        }
      }
    }
  }
  if (extra != nullptr && extra_coefficient != 0.0) extra->apply_add(extra_coefficient, in, out);
}

// --- Model ----------------------------------------------------------------

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
  if (const auto* p = ising()) {
    kind_ = ModelKind::ising;
    if (p->n_sites < 2) throw InvalidArgument("Ising chain needs L >= 2");
    if (!(std::isfinite(p->j0) && p->j0 > 0.0)) throw InvalidArgument("J0 must be positive");
    n_sites_ = p->n_sites;
    const std::size_t d = hilbert_dim(n_sites_);
    zz_diag_.resize(d);
    for (Index b = 0; b < d; ++b) {
      double e = 0.0;
      for (int j = 0; j < n_sites_; ++j) {
        const unsigned a = (b >> j) & 1u;
        const unsigned c = (b >> ((j + 1) % n_sites_)) & 1u;
        e += (a == c) ? 1.0 : -1.0;
      }
      zz_diag_[b] = e;
    }
    perturbation_ = CompiledOperator::compile(ising_perturbation(n_sites_, p->perturbation), n_sites_);
  } else {
    const auto& r = std::get<RydbergParams>(spec_);
    kind_ = ModelKind::rydberg;
    n_sites_ = static_cast<int>(r.positions.size());
    if (n_sites_ < 2) throw InvalidArgument("Rydberg array needs at least 2 atoms");
    if (!(r.blockade_radius > 0.0)) throw InvalidArgument("blockade radius must be positive");
    if (!(r.omega0 > 0.0)) throw InvalidArgument("Omega0 must be positive");
    if (!(r.rise_fraction > 0.0 && r.rise_fraction <= 0.5)) {
      throw InvalidArgument("rise_fraction must lie in (0, 0.5]");
    }
    if (!r.symmetry.empty() && r.symmetry.size() != r.positions.size()) {
      throw InvalidArgument("symmetry permutation must have one entry per atom");
    }
    const std::size_t d = hilbert_dim(n_sites_);
    number_diag_.resize(d);
    for (Index b = 0; b < d; ++b) number_diag_[b] = static_cast<double>(std::popcount(b));
    interaction_ = interaction_matrix(r.positions, r.blockade_radius, r.truncation_radius, r.omega0);
    nominal_pair_diag_ = std::make_shared<const std::vector<double>>(pair_diagonal(n_sites_, interaction_));
  }
}

StateVector Model::initial_state() const {
  return kind_ == ModelKind::ising ? StateVector::product_plus(n_sites_) : StateVector(n_sites_);
}

std::optional<SymmetryOperator> Model::symmetry() const {
  if (kind_ == ModelKind::ising) return SymmetryOperator::global_flip(n_sites_);
  const auto& r = *rydberg();
  if (r.symmetry.empty()) return std::nullopt;
  return SymmetryOperator::site_permutation(r.symmetry);
}

double Model::detuning(double s) const {
  const auto& r = *rydberg();
  return r.omega0 * (r.delta_min + (r.delta_max - r.delta_min) * s);
}

double Model::control_to_lambda(double s) const {
  if (kind_ == ModelKind::ising) return s;
  const auto& r = *rydberg();
  return r.delta_min + (r.delta_max - r.delta_min) * s;
}

double Model::lambda_to_control(double lambda) const {
  if (kind_ == ModelKind::ising) return lambda;
  const auto& r = *rydberg();
  return (lambda - r.delta_min) / (r.delta_max - r.delta_min);
}

void Model::instantaneous(double s, double window_value, const Perturbation& pert,
                          MatrixFreeHamiltonian& out) const {
  const std::size_t d = dim();
  out.n_sites = n_sites_;
  out.diagonal.resize(d);
  out.extra = nullptr;
  out.extra_coefficient = 0.0;
  if (kind_ == ModelKind::ising) {
    const auto& p = *ising();
    const auto [j, g] = ising_couplings(s, p.j0);
    out.transverse = -g;
    const double eps = pert.field;
    if (eps != 0.0 && perturbation_.is_diagonal()) {
      const auto& v = perturbation_.diagonal_values();
      for (std::size_t c = 0; c < d; ++c) out.diagonal[c] = -j * zz_diag_[c] + eps * v[c];
    } else {
      for (std::size_t c = 0; c < d; ++c) out.diagonal[c] = -j * zz_diag_[c];
      if (eps != 0.0) {
        if (p.perturbation == IsingPerturbation::X) {
          out.transverse += eps;
        } else {
          out.extra = &perturbation_;
          out.extra_coefficient = eps;
        }
      }
    }
  } else {
    const auto& r = *rydberg();
    const double delta = detuning(s);
    const auto& pair = pert.interaction ? *pert.interaction : *nominal_pair_diag_;
    for (std::size_t c = 0; c < d; ++c) out.diagonal[c] = -delta * number_diag_[c] + pair[c];
    out.transverse = 0.5 * r.omega0 * window_value;
  }
}

void Model::at_time(double s, double t, double total_time, const Perturbation& pert,
                    MatrixFreeHamiltonian& out) const {
  const double w = kind_ == ModelKind::rydberg ? window(t, total_time, rydberg()->rise_fraction) : 1.0;
  instantaneous(s, w, pert, out);
}

void Model::control_derivative(double s, MatrixFreeHamiltonian& out) const {
  const std::size_t d = dim();
  out.n_sites = n_sites_;
  out.diagonal.resize(d);
  out.extra = nullptr;
  out.extra_coefficient = 0.0;
  if (kind_ == ModelKind::ising) {
    const double j0 = ising()->j0;
    const double angle = 0.5 * std::numbers::pi * s;
    const double dj = j0 * 0.5 * std::numbers::pi * std::cos(angle);
    const double dg = -j0 * 0.5 * std::numbers::pi * std::sin(angle);
    for (std::size_t c = 0; c < d; ++c) out.diagonal[c] = -dj * zz_diag_[c];
    out.transverse = -dg;
  } else {
    const auto& r = *rydberg();
    const double slope = r.omega0 * (r.delta_max - r.delta_min);
    for (std::size_t c = 0; c < d; ++c) out.diagonal[c] = -slope * number_diag_[c];
    out.transverse = 0.0;
  }
}

Perturbation Model::unperturbed() const { return Perturbation{0.0, nominal_pair_diag_}; }

Perturbation Model::with_field(double epsilon) const {
  if (kind_ != ModelKind::ising) throw InvalidArgument("scalar field perturbations apply to Ising models");
  if (!std::isfinite(epsilon)) throw InvalidArgument("non-finite field");
  return Perturbation{epsilon, nullptr};
}

Perturbation Model::with_displacement(std::span<const Vec2> displacement) const {
  if (kind_ != ModelKind::rydberg) throw InvalidArgument("displacements apply to Rydberg models");
  const auto& r = *rydberg();
  if (displacement.size() != r.positions.size()) throw InvalidArgument("one displacement per atom required");
  // U' = U + c with c the (unnormalized) difference of interactions.
  const auto c = displacement_perturbation(r.positions, displacement, r.blockade_radius, 1.0,
                                           r.omega0, r.truncation_radius);
  std::vector<double> pair(interaction_);
  for (std::size_t i = 0; i < pair.size(); ++i) pair[i] += c.coefficients[i];
  return Perturbation{0.0, std::make_shared<const std::vector<double>>(pair_diagonal(n_sites_, pair))};
}

Perturbation Model::sample(const DisorderEnsemble& ensemble, std::size_t index) const {
  if (index >= ensemble.size()) throw InvalidArgument("sample index out of range");
  if (ensemble.kind == DisorderKind::scalar_field) {
    if (kind_ != ModelKind::ising) throw InvalidArgument("scalar-field ensemble needs an Ising model");
    return with_field(ensemble.fields[index]);
  }
  if (kind_ != ModelKind::rydberg) throw InvalidArgument("displacement ensemble needs a Rydberg model");
  return with_displacement(ensemble.displacements[index]);
}

const CompiledOperator& Model::perturbation_operator() const {
  if (kind_ != ModelKind::ising) throw InvalidArgument("Rydberg perturbations are displacement operators");
  return perturbation_;
}

bool Model::perturbation_is_odd() const noexcept {
  if (kind_ != ModelKind::ising) return false;
  const auto k = ising()->perturbation;
  return k == IsingPerturbation::Z || k == IsingPerturbation::ZZZ;
}

void Model::apply_excitation_number(std::span<const cplx> in, std::span<cplx> out) const {
  MatrixFreeHamiltonian op;
  op.n_sites = n_sites_;
  if (kind_ == ModelKind::ising) {
    op.diagonal.assign(dim(), 0.5 * n_sites_);
    op.transverse = -0.5;
  } else {
    op.diagonal = number_diag_;
  }
  op.apply(in, out);
}

DisorderEnsemble sample_disorder(const Model& model, double sigma, int n_samples,
                                 std::uint64_t master_seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("sigma must be >= 0");
  if (n_samples < 1) throw InvalidArgument("ensemble needs at least one sample");
  DisorderEnsemble e;
  e.sigma = sigma;
  e.master_seed = master_seed;
  if (model.kind() == ModelKind::ising) {
    e.kind = DisorderKind::scalar_field;
    if (sigma == 0.0 || n_samples == 1) {
      e.fields = {0.0};
    } else {
      // Symmetric grid with exact sign symmetry: eps_l = sigma (2l - 1 - N) / (N - 1).
      const int n = n_samples;
      for (int l = 1; l <= n; ++l) e.fields.push_back(sigma * double(2 * l - 1 - n) / double(n - 1));
    }
    return e;
  }
  e.kind = DisorderKind::displacement;
  const int atoms = model.n_sites();
  if (sigma == 0.0) {
    e.displacements.assign(1, std::vector<Vec2>(atoms));
    return e;
  }
  for (int l = 0; l < n_samples; ++l) {
    std::mt19937_64 rng(sample_seed(master_seed, static_cast<std::uint64_t>(l)));
    std::normal_distribution<double> gauss(0.0, sigma);
    std::vector<Vec2> dx(atoms);
    for (auto& v : dx) {
      v.x = gauss(rng);
      v.y = gauss(rng);
    }
    e.displacements.push_back(std::move(dx));
  }
  return e;
}

double window(double t, double total_time, double rise_fraction) {
  if (!(total_time > 0.0)) throw InvalidArgument("window: T must be positive");
  if (!(rise_fraction > 0.0 && rise_fraction <= 0.5)) {
    throw InvalidArgument("window: rise_fraction must lie in (0, 0.5]");
  }
  const double slack = 1e-12 * total_time;
  if (t < -slack || t > total_time + slack) throw InvalidArgument("window: t outside [0, T]");
  const double u = std::clamp(std::min(t, total_time - t), 0.0, 0.5 * total_time);
  const double rise = rise_fraction * total_time;
  if (u >= rise) return 1.0;
  return 0.5 * (1.0 - std::cos(std::numbers::pi * u / rise));
}

}  // namespace echoprep
