#pragma once

#include "config.hpp"

#include <optional>
#include <ostream>
#include <string>

namespace mlpath::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumeric = 2;

/// Most likely path: writes path.csv, charges.csv, report.json.
int cmd_mlp(const RunConfig& cfg, std::ostream& log);

/// Raw ensemble plus optional bridge filter: writes ensemble/<i>.csv,
/// bridge_mean.csv (when filtering) and ensemble_meta.json.
int cmd_simulate(const RunConfig& cfg, std::ostream& log);

/// Recomputes charges for an existing trajectory CSV: writes charges.csv and
/// charges.json.
int cmd_charges(const RunConfig& cfg, const std::string& path_csv, std::ostream& log);

/// Transition time against energy for a 1D system: writes ttime.csv and
/// ttime.json.
int cmd_ttime(const RunConfig& cfg, std::ostream& log);

/// Ring score and log density on a grid: writes score.csv and score_meta.json.
int cmd_scorefield(const RunConfig& cfg, std::ostream& log);

/// Fixed points of the deterministic system: writes fixedpoints.json.
int cmd_fixedpoints(const RunConfig& cfg, std::ostream& log);

/// Parses argv and dispatches; returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace mlpath::cli
