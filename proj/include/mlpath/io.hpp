#pragma once

#include "mlpath/lagrangian.hpp"
#include "mlpath/optimizer.hpp"
#include "mlpath/trajectory.hpp"

#include <json.hpp>

#include <fstream>
#include <ostream>
#include <string>

namespace mlpath {

/// Charges CSV: k,t[,E],p0..p{N-1}[,L_i_j...]. One row per path segment,
/// t is the segment midpoint time.
inline void write_charges_csv(std::ostream& os, const ChargeSeries& cs) {
  const int n = cs.momentum.empty() ? 0 : static_cast<int>(cs.momentum.front().size());
  os << "k,t";
  if (cs.energy) os << ",E";
  for (int c = 0; c < n; ++c) os << ",p" << c;
  for (const auto& [i, j] : cs.planes) os << ",L_" << i << '_' << j;
  os << '\n';
  for (std::size_t k = 0; k < cs.size(); ++k) {
    os << k << ',' << format_double(cs.times[k]);
    if (cs.energy) os << ',' << format_double((*cs.energy)[k]);
    for (int c = 0; c < n; ++c) os << ',' << format_double(cs.momentum[k](c));
    for (const auto& series : cs.angular_momentum) os << ',' << format_double(series[k]);
    os << '\n';
  }
}

inline void write_charges_csv(const std::string& path, const ChargeSeries& cs) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_charges_csv(os, cs);
}

inline nlohmann::ordered_json to_json(const OptimizationReport& r) {
  nlohmann::ordered_json j;
  j["action"] = r.action;
  j["grad_norm"] = r.grad_norm;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["termination"] = to_string(r.termination);
  return j;
}

/// JSON text with every double printed to 17 significant digits.
inline std::string dump_json(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << text;
}

}  // namespace mlpath
