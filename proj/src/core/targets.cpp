#include "echoprep/targets.hpp"

#include <cmath>

#include "echoprep/eigensolver.hpp"
#include "echoprep/error.hpp"

namespace echoprep {

TargetKind parse_target_kind(const std::string& name) {
  if (name == "ising_ghz_plus") return TargetKind::ising_ghz_plus;
  if (name == "rydberg_ghz_plus") return TargetKind::rydberg_ghz_plus;
  if (name == "z3_cat") return TargetKind::z3_cat;
  if (name == "z4_cat") return TargetKind::z4_cat;
  if (name == "ground_state") return TargetKind::ground_state;
  throw InvalidArgument("unknown target kind '" + name + "'");
}

std::string to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::ising_ghz_plus:
      return "ising_ghz_plus";
    case TargetKind::rydberg_ghz_plus:
      return "rydberg_ghz_plus";
    case TargetKind::z3_cat:
      return "z3_cat";
    case TargetKind::z4_cat:
      return "z4_cat";
    case TargetKind::ground_state:
      return "ground_state";
  }
  return "?";
}

StateVector ghz_plus(int n_sites) {
  StateVector psi(n_sites);
  const double a = 1.0 / std::sqrt(2.0);
  psi[0] = a;
  psi[psi.dim() - 1] = a;
  return psi;
}

namespace {

StateVector cat_state(int n_sites, int period) {
  if (n_sites % period != 0) {
    throw InvalidArgument("Z" + std::to_string(period) + " cat state needs L divisible by " +
                          std::to_string(period));
  }
  StateVector psi(n_sites);
  psi[0] = 0.0;
  const double a = 1.0 / std::sqrt(static_cast<double>(period));
  for (int shift = 0; shift < period; ++shift) {
    Index b = 0;
    for (int j = shift; j < n_sites; j += period) b |= Index{1} << j;
    psi[b] = a;
  }
  return psi;
}

}  // namespace

StateVector build_target(TargetKind kind, const Model& model, double final_control) {
  const int l = model.n_sites();
  switch (kind) {
    case TargetKind::ising_ghz_plus:
      if (model.kind() != ModelKind::ising) throw InvalidArgument("ising_ghz_plus needs an Ising model");
      return ghz_plus(l);
    case TargetKind::rydberg_ghz_plus: {
      if (model.kind() != ModelKind::rydberg) {
        throw InvalidArgument("rydberg_ghz_plus needs a Rydberg model");
      }
      const auto labels = sublattice_labels(model.rydberg()->positions);
      Index a = 0, b = 0;
      for (int j = 0; j < l; ++j) (labels[j] == 0 ? a : b) |= Index{1} << j;
      StateVector psi(l);
      psi[0] = 0.0;
      psi[a] = 1.0 / std::sqrt(2.0);
      psi[b] = 1.0 / std::sqrt(2.0);
      return psi;
    }
    case TargetKind::z3_cat:
    case TargetKind::z4_cat:
      if (model.kind() != ModelKind::rydberg) throw InvalidArgument("cat targets need a Rydberg ring");
      return cat_state(l, kind == TargetKind::z3_cat ? 3 : 4);
    case TargetKind::ground_state: {
      MatrixFreeHamiltonian h;
      model.instantaneous(final_control, 0.0, model.unperturbed(), h);
      EigenOptions opt;
      opt.symmetry = model.symmetry();
      const auto pairs = lowest_eigenpairs(
          [&](std::span<const cplx> in, std::span<cplx> out) { h.apply(in, out); }, model.dim(), 1, opt);
      StateVector psi(l, pairs.front().vector);
      psi.normalize();
      return psi;
    }
  }
  throw InvalidArgument("unknown target kind");
}

}  // namespace echoprep
