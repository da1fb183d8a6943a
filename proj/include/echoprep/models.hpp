#pragma once

// Ising and Rydberg Hamiltonians, array geometries, van der Waals interaction
// matrices, symmetry-breaking perturbations and static disorder ensembles.
//
// Units: Ising energies in units of J0; Rydberg energies in units of Omega0
// and lengths in units of the lattice spacing a.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "echoprep/hilbert.hpp"

namespace echoprep {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

enum class ModelKind { ising, rydberg };
enum class IsingPerturbation { Z, ZZZ, X, XX };

std::string to_string(IsingPerturbation p);
IsingPerturbation parse_ising_perturbation(const std::string& name);

struct IsingParams {
  int n_sites = 8;
  double j0 = 1.0;
  IsingPerturbation perturbation = IsingPerturbation::Z;
};

struct RydbergParams {
  std::vector<Vec2> positions;
  double blockade_radius = 1.15;
  double omega0 = 1.0;
  // Rise (and fall) time of the Rabi window as a fraction of T.
  double rise_fraction = 0.25;
  std::optional<double> truncation_radius;
  // Detuning as an affine function of the control: Delta(s) = min + (max - min) s.
  double delta_min = -1.0;
  double delta_max = 3.0;
  // Site permutation generating the lattice symmetry (empty: none).
  std::vector<int> symmetry;
};

using ModelSpec = std::variant<IsingParams, RydbergParams>;

// J = J0 sin(pi s / 2), g = J0 cos(pi s / 2)
std::pair<double, double> ising_couplings(double s, double j0 = 1.0);

// --- geometry -------------------------------------------------------------

enum class GeometryKind { chain, square, ladder, ring };

struct Geometry {
  std::vector<Vec2> positions;
  // Sublattice-exchange (square, ladder) or one-site translation (ring).
  std::vector<int> symmetry;
};

GeometryKind parse_geometry_kind(const std::string& name);
// square: dims = (m, n), x fastest; ladder: dims = (n, 2); chain and ring: dims = (L).
Geometry build_geometry(GeometryKind kind, std::span<const int> dims);

std::vector<Vec2> read_geometry(const std::string& path);
void write_geometry(const std::string& path, std::span<const Vec2> positions);

// Row-major L x L, U_jk = omega0 (R_b / |x_j - x_k|)^6, zero diagonal, zero
// beyond the truncation radius.
std::vector<double> interaction_matrix(std::span<const Vec2> positions, double blockade_radius,
                                       std::optional<double> truncation_radius = std::nullopt,
                                       double omega0 = 1.0);

// Two-coloring of the nearest-neighbor graph; throws when not bipartite.
std::vector<int> sublattice_labels(std::span<const Vec2> positions);

// --- perturbations --------------------------------------------------------

// sum_j V_j for the chosen Ising perturbation kind (periodic chain).
OperatorSpec ising_perturbation(int n_sites, IsingPerturbation kind);

// Pair coefficients c_jk of the normalized displacement operator
//   V = (a / sigma) sum_{j<k} c_jk n_j n_k,
//   c_jk = omega0 R_b^6 (|x'_j - x'_k|^-6 - |x_j - x_k|^-6),  x' = x + dx.
// Row-major L x L with zero diagonal.
struct PairOperator {
  int n_sites = 0;
  std::vector<double> coefficients;
  double scale = 1.0;  // a / sigma

  OperatorSpec to_spec() const;
  std::vector<double> diagonal() const;
};

PairOperator displacement_perturbation(std::span<const Vec2> positions,
                                       std::span<const Vec2> displacement, double blockade_radius,
                                       double sigma, double omega0 = 1.0,
                                       std::optional<double> truncation_radius = std::nullopt);

// Diagonal of sum_{j<k} U_jk n_j n_k.
std::vector<double> pair_diagonal(int n_sites, std::span<const double> pair_matrix);

// --- disorder ----------------------------------------------------------------

enum class DisorderKind { scalar_field, displacement };

struct DisorderEnsemble {
  DisorderKind kind = DisorderKind::scalar_field;
  double sigma = 0.0;
  std::uint64_t master_seed = 0;
  std::vector<double> fields;                      // scalar_field
  std::vector<std::vector<Vec2>> displacements;    // displacement

  std::size_t size() const noexcept {
    return kind == DisorderKind::scalar_field ? fields.size() : displacements.size();
  }
};

// Deterministic per-sample seed.
std::uint64_t sample_seed(std::uint64_t master_seed, std::uint64_t index);

// --- matrix-free Hamiltonian ----------------------------------------------

// H = diag(diagonal) + transverse * sum_j X_j + extra_coefficient * extra
struct MatrixFreeHamiltonian {
  int n_sites = 0;
  std::vector<double> diagonal;
  double transverse = 0.0;
  const CompiledOperator* extra = nullptr;
  double extra_coefficient = 0.0;

  std::size_t dim() const noexcept { return std::size_t{1} << n_sites; }
  void apply(std::span<const cplx> in, std::span<cplx> out) const;
};

// Static part of one disorder sample, prepared once per propagation.
struct Perturbation {
  double field = 0.0;  // Ising perturbation strength epsilon
  std::shared_ptr<const std::vector<double>> interaction;  // Rydberg: diag of sum U'_jk n_j n_k
};

class Model {
 public:
  explicit Model(ModelSpec spec);

  ModelKind kind() const noexcept { return kind_; }
  const ModelSpec& spec() const noexcept { return spec_; }
  const IsingParams* ising() const noexcept { return std::get_if<IsingParams>(&spec_); }
  const RydbergParams* rydberg() const noexcept { return std::get_if<RydbergParams>(&spec_); }
  int n_sites() const noexcept { return n_sites_; }
  std::size_t dim() const noexcept { return std::size_t{1} << n_sites_; }

  // |++...+> for Ising, |gg...g> for Rydberg.
  StateVector initial_state() const;
  std::optional<SymmetryOperator> symmetry() const;

  // Hamiltonian at control s with Rabi window value w (ignored for Ising).
  void instantaneous(double s, double window_value, const Perturbation& pert,
                     MatrixFreeHamiltonian& out) const;
  // Hamiltonian at time t of a protocol of duration T.
  void at_time(double s, double t, double total_time, const Perturbation& pert,
               MatrixFreeHamiltonian& out) const;
  // dH/ds (independent of the perturbation).
  void control_derivative(double s, MatrixFreeHamiltonian& out) const;

  Perturbation unperturbed() const;
  Perturbation with_field(double epsilon) const;
  Perturbation with_displacement(std::span<const Vec2> displacement) const;
  Perturbation sample(const DisorderEnsemble& ensemble, std::size_t index) const;

  // Ising: sum_j V_j of the configured kind. Rydberg: not defined (see
  // displacement_perturbation).
  const CompiledOperator& perturbation_operator() const;
  // True when the perturbation anticommutes with the global flip (Z, ZZZ).
  bool perturbation_is_odd() const noexcept;

  double detuning(double s) const;
  // Rydberg: lambda = Delta / Omega0 at the window plateau. Ising: lambda = s.
  double control_to_lambda(double s) const;
  double lambda_to_control(double lambda) const;

  // Excitation number: sum_j n_j (Rydberg) or sum_j (1 - X_j)/2 (Ising).
  void apply_excitation_number(std::span<const cplx> in, std::span<cplx> out) const;

  const std::vector<double>& nominal_interaction_matrix() const noexcept { return interaction_; }

 private:
  ModelSpec spec_;
  ModelKind kind_;
  int n_sites_ = 0;
  std::vector<double> zz_diag_;        // Ising: sum_j Z_j Z_{j+1}
  CompiledOperator perturbation_;      // Ising
  std::vector<double> number_diag_;    // Rydberg: sum_j n_j
  std::vector<double> interaction_;    // Rydberg: nominal U_jk
  std::shared_ptr<const std::vector<double>> nominal_pair_diag_;
};

DisorderEnsemble sample_disorder(const Model& model, double sigma, int n_samples,
                                 std::uint64_t master_seed);

// Rabi window: cosine rise on [0, rise T], plateau 1 up to T/2, mirrored.
double window(double t, double total_time, double rise_fraction);

}  // namespace echoprep
