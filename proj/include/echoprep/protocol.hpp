#pragma once

// Piecewise-constant control protocols on a uniform midpoint grid.

#include <string>
#include <vector>

namespace echoprep {

struct ControlProtocol {
  double total_time = 1.0;
  // s_j at t_j = (j + 1/2) dt, dt = T / N.
  std::vector<double> values;
  double s0_target = 0.0;
  double sf_target = 1.0;

  int n_steps() const noexcept { return static_cast<int>(values.size()); }
  double dt() const { return total_time / static_cast<double>(values.size()); }
  double time(int j) const { return (j + 0.5) * dt(); }

  // Throws unless N >= 1, T > 0 and all values are finite.
  void validate() const;

  // s_j = s0 + (s1 - s0) t_j / T
  static ControlProtocol linear(double total_time, int n_steps, double s0 = 0.0, double s1 = 1.0);

  // Linear interpolation between midpoints, constant beyond the first and last.
  double value_at(double t) const;
  // Same shape on the relative grid u = t/T with a new duration.
  ControlProtocol rescaled(double new_total_time) const;
  // Same shape on the relative grid resampled to n_steps points.
  ControlProtocol resampled(int n_steps) const;
};

// Header line "N T", then rows "j t_j s_j"; lines starting with '#' are
// comments. Values are written with 17 significant digits.
void write_protocol(const std::string& path, const ControlProtocol& protocol);
ControlProtocol read_protocol(const std::string& path);

}  // namespace echoprep
