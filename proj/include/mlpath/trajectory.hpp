#pragma once

#include "mlpath/types.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace mlpath {

/// Time-gridded sequence of states, either simulated or optimized.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::optional<std::uint64_t> seed;

  std::size_t size() const { return times.size(); }
  int dim() const { return states.empty() ? 0 : static_cast<int>(states.front().size()); }
  double t0() const { return times.front(); }
  double t_end() const { return times.back(); }
};

/// Throws ArgumentError unless times are strictly increasing and uniform to
/// 1e-12 relative and every state is finite.
inline void validate(const Trajectory& tr) {
  if (tr.times.size() != tr.states.size()) throw ArgumentError("trajectory times/states length mismatch");
  if (tr.times.size() < 2) throw ArgumentError("trajectory needs at least two nodes");
  const double span = tr.times.back() - tr.times.front();
  const double h = span / static_cast<double>(tr.times.size() - 1);
  if (!(h > 0.0)) throw ArgumentError("trajectory times must be strictly increasing");
  const double scale = std::max({std::abs(tr.times.front()), std::abs(tr.times.back()), span});
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const double expect = tr.times.front() + static_cast<double>(k) * h;
    if (std::abs(tr.times[k] - expect) > 1e-12 * scale)
      throw ArgumentError("trajectory grid not uniform at node " + std::to_string(k));
    if (!tr.states[k].allFinite()) throw ArgumentError("trajectory state not finite at node " + std::to_string(k));
  }
}

/// Shortest representation that round-trips: 17 significant digits.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(std::ostream& os, const Trajectory& tr) {
  const int n = tr.dim();
  os << "k,t";
  for (int c = 0; c < n; ++c) os << ",x" << c;
  os << '\n';
  for (std::size_t k = 0; k < tr.size(); ++k) {
    os << k << ',' << format_double(tr.times[k]);
    for (int c = 0; c < n; ++c) os << ',' << format_double(tr.states[k](c));
    os << '\n';
  }
}

inline void write_csv(const std::string& path, const Trajectory& tr) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_csv(os, tr);
}

/// Parses the `k,t,x0,...` schema. Throws ArgumentError with the line number
/// on malformed input.
inline Trajectory read_csv(std::istream& is) {
  Trajectory tr;
  std::string line;
  if (!std::getline(is, line)) throw ArgumentError("trajectory CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 3 || header[0] != "k" || header[1] != "t")
    throw ArgumentError("trajectory CSV line 1: expected header k,t,x0,...");
  const int n = static_cast<int>(header.size()) - 2;
  for (int c = 0; c < n; ++c)
    if (header[c + 2] != "x" + std::to_string(c))
      throw ArgumentError("trajectory CSV line 1: unexpected column '" + header[c + 2] + "'");
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    try {
      while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ArgumentError("trajectory CSV line " + std::to_string(lineno) + ": unparsable number '" + cell + "'");
    }
    if (static_cast<int>(vals.size()) != n + 2)
      throw ArgumentError("trajectory CSV line " + std::to_string(lineno) + ": expected " +
                          std::to_string(n + 2) + " columns");
    tr.times.push_back(vals[1]);
    Vector x(n);
    for (int c = 0; c < n; ++c) x(c) = vals[c + 2];
    tr.states.push_back(std::move(x));
  }
  return tr;
}

inline Trajectory read_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ArgumentError("cannot open " + path);
  return read_csv(is);
}

}  // namespace mlpath
