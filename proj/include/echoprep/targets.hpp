#pragma once

// Target states for state preparation.

#include <string>

#include "echoprep/hilbert.hpp"
#include "echoprep/models.hpp"

namespace echoprep {

enum class TargetKind { ising_ghz_plus, rydberg_ghz_plus, z3_cat, z4_cat, ground_state };

TargetKind parse_target_kind(const std::string& name);
std::string to_string(TargetKind kind);

// Normalized target. ground_state is the lowest eigenvector (symmetric sector
// first on exact degeneracy) of the Hamiltonian at control final_control and
// t = T, where the Rydberg drive is off.
StateVector build_target(TargetKind kind, const Model& model, double final_control = 1.0);

// (|0...0> + |1...1>)/sqrt 2 in the bit convention of hilbert.hpp.
StateVector ghz_plus(int n_sites);

}  // namespace echoprep
