#include "echoprep/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "echoprep/error.hpp"

namespace echoprep {

void ControlProtocol::validate() const {
  if (values.empty()) throw InvalidArgument("protocol needs N >= 1 steps");
  if (!(std::isfinite(total_time) && total_time > 0.0)) {
    throw InvalidArgument("protocol duration T must be positive");
  }
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (!std::isfinite(values[j])) {
      throw InvalidArgument("protocol value s_" + std::to_string(j) + " is not finite");
    }
  }
}

ControlProtocol ControlProtocol::linear(double total_time, int n_steps, double s0, double s1) {
  if (n_steps < 1) throw InvalidArgument("protocol needs N >= 1 steps");
  ControlProtocol p;
  p.total_time = total_time;
  p.s0_target = s0;
  p.sf_target = s1;
  p.values.resize(n_steps);
  for (int j = 0; j < n_steps; ++j) p.values[j] = s0 + (s1 - s0) * (j + 0.5) / n_steps;
  p.validate();
  return p;
}

double ControlProtocol::value_at(double t) const {
  const int n = n_steps();
  const double x = t / dt() - 0.5;
  if (x <= 0.0) return values.front();
  if (x >= n - 1) return values.back();
  const int j = static_cast<int>(std::floor(x));
  const double f = x - j;
  return (1.0 - f) * values[j] + f * values[j + 1];
}

ControlProtocol ControlProtocol::rescaled(double new_total_time) const {
  ControlProtocol p = *this;
  p.total_time = new_total_time;
  p.validate();
  return p;
}

ControlProtocol ControlProtocol::resampled(int n) const {
  if (n < 1) throw InvalidArgument("protocol needs N >= 1 steps");
  if (n == n_steps()) return *this;
  ControlProtocol p = *this;
  p.values.resize(n);
  for (int j = 0; j < n; ++j) p.values[j] = value_at((j + 0.5) * total_time / n);
  return p;
}

void write_protocol(const std::string& path, const ControlProtocol& protocol) {
  protocol.validate();
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw IoError("cannot write protocol file '" + path + "'");
  std::fprintf(f, "# N T\n%d %.17g\n# j t_j s_j\n", protocol.n_steps(), protocol.total_time);
  for (int j = 0; j < protocol.n_steps(); ++j) {
    std::fprintf(f, "%d %.17g %.17g\n", j, protocol.time(j), protocol.values[j]);
  }
  if (std::fclose(f) != 0) throw IoError("error writing protocol file '" + path + "'");
}

ControlProtocol read_protocol(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open protocol file '" + path + "'");
  ControlProtocol p;
  long n = -1;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream row(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (n < 0) {
      if (!(row >> n >> p.total_time) || n < 1) throw IoError(where + ": expected header 'N T'");
      p.values.reserve(n);
      continue;
    }
    long j = 0;
    double t = 0.0, s = 0.0;
    if (!(row >> j >> t >> s)) throw IoError(where + ": expected 'j t_j s_j'");
    if (j != static_cast<long>(p.values.size())) throw IoError(where + ": rows must be in order");
    p.values.push_back(s);
  }
  if (n < 0) throw IoError(path + ": missing header");
  if (static_cast<long>(p.values.size()) != n) {
    throw IoError(path + ": header announces " + std::to_string(n) + " rows, found " +
                  std::to_string(p.values.size()));
  }
  p.validate();
  return p;
}

}  // namespace echoprep
