#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "echoprep/diagnostics.hpp"
#include "echoprep/error.hpp"
#include "echoprep/noise.hpp"
#include "echoprep/optimizer.hpp"
#include "echoprep/oracle.hpp"
#include "echoprep/parallel.hpp"
#include "echoprep/propagator.hpp"
#include "echoprep/report.hpp"
#include "echoprep/run.hpp"
#include "echoprep/targets.hpp"

namespace acceptance {

using namespace echoprep;

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Robust and clean continuation sweeps of one Ising size, computed once and
// shared by the criteria that need them.
struct IsingSweep {
  int n_sites = 0;
  std::vector<ContinuationLeg> robust;     // sigma > 0
  std::vector<ContinuationLeg> reference;  // sigma = 0
  Crossover crossover;
};

struct Context {
  std::filesystem::path artifacts;
  std::map<int, IsingSweep> sweeps;

  const IsingSweep& ising_sweep(int n_sites);
};

// printf into a std::string
std::string format(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

Outcome criterion_1(Context&);
Outcome criterion_2(Context&);
Outcome criterion_3(Context&);
Outcome criterion_4(Context&);
Outcome criterion_5(Context&);
Outcome criterion_6(Context&);
Outcome criterion_7(Context&);
Outcome criterion_8(Context&);
Outcome criterion_9(Context&);
Outcome criterion_10(Context&);
Outcome criterion_11(Context&);

}  // namespace acceptance
