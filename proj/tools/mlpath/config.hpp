#pragma once

#include "mlpath/mlpath.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mlpath::cli {

/// Invalid configuration. The message is prefixed with "<source>:<line>:".
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct SystemConfig {
  std::string kind;  // constant_drift | ou | piet | ring | forward_diffusion
  DriftDiffusionParams drift_diffusion;
  OuParams ou;
  PietParams piet;
  RingParams ring;
  int forward_dim = 1;
  int line = 0;
};

struct PathConfig {
  Vector x0;
  Vector xf;
  double T = 1.0;
  int K = 200;
  double t_start = 0.0;
  int line = 0;
  int x0_line = 0;
  int xf_line = 0;
};

struct OptimizerTable {
  OptimizerConfig config;
  int multi_start = 1;
  double perturbation = 0.1;
  std::uint64_t seed = 0;
};

struct SimulateConfig {
  std::size_t n_paths = 981;
  double dt = 1e-3;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  double divergence_bound = kDefaultDivergenceBound;
  std::optional<Vector> x0;
  std::optional<Vector> xf;
  std::optional<double> T;
  double t0 = 0.0;
  double tol = 0.05;
  double tol_t = 0.05;
  bool first_passage = true;  // used when the system has bounds
  bool save_paths = true;
  int line = 0;
  int x0_line = 0;
};

struct TtimeConfig {
  double x0 = 0.0;
  double xf = 1.0;
  std::vector<double> energies;
  int line = 0;
};

struct ScoreFieldConfig {
  double t = 1.0;
  double xmin = -2.0, xmax = 2.0, ymin = -2.0, ymax = 2.0;
  int nx = 41, ny = 41;
};

struct FixedPointsConfig {
  std::optional<Vector> lower;
  std::optional<Vector> upper;
  int seeds = 21;
  double tol = 1e-12;
};

struct RunConfig {
  std::string source;
  SystemConfig system;
  std::optional<PathConfig> path;
  OptimizerTable optimizer;
  SimulateConfig simulate;
  bool has_simulate = false;
  std::optional<TtimeConfig> ttime;
  ScoreFieldConfig scorefield;
  FixedPointsConfig fixedpoints;
  std::optional<std::string> charges_path;
  std::string out_dir = "out";
};

RunConfig parse_config(std::string_view text, const std::string& source);
RunConfig load_config(const std::string& file);

/// Builds the SDE system named by the config; throws ConfigError on invalid
/// parameters (e.g. a non-tristable network).
SdeSystem build_system(const RunConfig& cfg);

/// Cross-checks against the built system: endpoint dimensions and the like.
void validate_against(const RunConfig& cfg, const SdeSystem& sys);

}  // namespace mlpath::cli
