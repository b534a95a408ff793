#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace mlpath::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

fs::path out_dir(const RunConfig& cfg) {
  fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  return dir;
}

ConfigError config_error(const RunConfig& cfg, int line, const std::string& msg) {
  return ConfigError(cfg.source + ':' + std::to_string(line) + ": " + msg);
}

const PathConfig& require_path(const RunConfig& cfg, const char* command) {
  if (!cfg.path) throw config_error(cfg, 1, std::string(command) + " needs a [path] table");
  return *cfg.path;
}

json series_summary(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  if (!v.empty()) mean /= static_cast<double>(v.size());
  json j;
  j["mean"] = mean;
  j["max_abs_deviation"] = max_abs_deviation(v);
  j["relative_variation"] = relative_variation(v);
  return j;
}

/// Summary of every charge column in the series.
json charge_summary(const ChargeSeries& cs) {
  json j = json::object();
  if (cs.energy) j["E"] = series_summary(*cs.energy);
  const int n = cs.momentum.empty() ? 0 : static_cast<int>(cs.momentum.front().size());
  for (int c = 0; c < n; ++c) {
    std::vector<double> col;
    col.reserve(cs.size());
    for (const auto& p : cs.momentum) col.push_back(p(c));
    j["p" + std::to_string(c)] = series_summary(col);
  }
  for (std::size_t q = 0; q < cs.planes.size(); ++q)
    j["L_" + std::to_string(cs.planes[q].first) + "_" + std::to_string(cs.planes[q].second)] =
        series_summary(cs.angular_momentum[q]);
  return j;
}

/// Linear path plus (count - 1) smooth random bumps of amplitude
/// `perturbation` vanishing at both endpoints.
std::vector<DiscretizedPath> starting_paths(const PathConfig& pc, const OptimizerTable& opt) {
  const DiscretizedPath base = init_path(pc.x0, pc.xf, pc.T, pc.K, LinearInit{}, pc.t_start);
  std::vector<DiscretizedPath> inits{base};
  for (int i = 1; i < opt.multi_start; ++i) {
    std::mt19937_64 rng(trajectory_seed(opt.seed, static_cast<std::uint64_t>(i)));
    std::normal_distribution<double> normal;
    Vector dir(pc.x0.size());
    for (Eigen::Index c = 0; c < dir.size(); ++c) dir(c) = normal(rng);
    std::vector<Vector> nodes = base.nodes();
    for (int k = 1; k < pc.K; ++k)
      nodes[static_cast<std::size_t>(k)] += opt.perturbation * std::sin(M_PI * k / pc.K) * dir;
    inits.emplace_back(std::move(nodes), pc.T, pc.t_start);
  }
  return inits;
}

void write_charges(const fs::path& dir, const ChargeSeries& cs) { write_charges_csv((dir / "charges.csv").string(), cs); }

std::vector<double> normalized_grid_mean(const std::vector<Trajectory>& kept, int points, int component) {
  std::vector<double> mean(static_cast<std::size_t>(points), 0.0);
  for (const auto& tr : kept) {
    const double t0 = tr.times.front();
    const double span = tr.times.back() - t0;
    for (int q = 0; q < points; ++q) {
      const double t = t0 + span * q / (points - 1);
      mean[static_cast<std::size_t>(q)] += detail::interpolate(tr, t)(component);
    }
  }
  for (auto& m : mean) m /= static_cast<double>(kept.size());
  return mean;
}

}  // namespace

int cmd_mlp(const RunConfig& cfg, std::ostream& log) {
  const SdeSystem sys = build_system(cfg);
  validate_against(cfg, sys);
  const PathConfig& pc = require_path(cfg, "mlp");
  const auto dir = out_dir(cfg);

  const auto inits = starting_paths(pc, cfg.optimizer);
  std::vector<OptimizationResult> minima;
  if (inits.size() == 1)
    minima.push_back(minimize_action(sys, inits.front(), cfg.optimizer.config));
  else
    minima = multi_start(sys, inits, cfg.optimizer.config, 0);
  const OptimizationResult& best = minima.front();

  write_csv((dir / "path.csv").string(), best.path.to_trajectory());
  const ChargeSeries cs = charge_series(sys, best.path, sys.declared_symmetries);
  write_charges(dir, cs);

  json report = mlpath::to_json(best.report);
  report["system"] = sys.name;
  report["T"] = pc.T;
  report["K"] = pc.K;
  report["t_start"] = pc.t_start;
  report["initial_action"] = best.report.initial_action;
  report["max_el_residual"] =
      max_residual_norm(euler_lagrange_residual(sys, best.path, cfg.optimizer.config.jacobian_source()));
  report["charges"] = charge_summary(cs);
  if (inits.size() > 1) {
    json arr = json::array();
    for (const auto& m : minima) {
      json e = mlpath::to_json(m.report);
      e["charges"] = charge_summary(charge_series(sys, m.path, sys.declared_symmetries));
      arr.push_back(std::move(e));
    }
    report["starts"] = inits.size();
    report["minima"] = std::move(arr);
  }
  write_text((dir / "report.json").string(), dump_json(report));

  log << "mlp: S=" << format_double(best.report.action) << " grad=" << format_double(best.report.grad_norm)
      << " iters=" << best.report.iterations << " " << to_string(best.report.termination) << '\n';
  return best.report.converged ? kExitOk : kExitNumeric;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const SdeSystem sys = build_system(cfg);
  validate_against(cfg, sys);
  if (!cfg.has_simulate) throw config_error(cfg, 1, "simulate needs a [simulate] table");
  const SimulateConfig& sc = cfg.simulate;
  const Vector x0 = sc.x0 ? *sc.x0 : (cfg.path ? cfg.path->x0 : Vector());
  if (x0.size() == 0) throw config_error(cfg, sc.line, "simulate needs x0 (in [simulate] or [path])");
  const double T = sc.T ? *sc.T : (cfg.path ? cfg.path->T : 0.0);
  if (!(T > 0.0)) throw config_error(cfg, sc.line, "simulate needs a positive T (in [simulate] or [path])");
  std::optional<Vector> xf = sc.xf;
  if (!xf && cfg.path) xf = cfg.path->xf;

  const bool first_passage = xf && sc.first_passage && cfg.system.kind == "constant_drift" &&
                             cfg.system.drift_diffusion.bounds.has_value();
  // Paths must run past the hit-time window so late hits are still seen.
  const double horizon = first_passage ? T + sc.tol_t : T;

  EnsembleOptions opts;
  opts.n_paths = sc.n_paths;
  opts.dt = sc.dt;
  opts.seed = sc.seed;
  opts.threads = sc.threads;
  opts.divergence_bound = sc.divergence_bound;
  const Ensemble ens = simulate_ensemble(sys, x0, sc.t0, horizon, opts);

  const auto dir = out_dir(cfg);
  std::vector<std::size_t> indices;
  {
    std::size_t d = 0;
    for (std::size_t i = 0; i < ens.total; ++i) {
      if (d < ens.diverged.size() && ens.diverged[d] == i) {
        ++d;
        continue;
      }
      indices.push_back(i);
    }
  }
  if (sc.save_paths) {
    const fs::path edir = dir / "ensemble";
    fs::remove_all(edir);
    fs::create_directories(edir);
    for (std::size_t q = 0; q < ens.trajectories.size(); ++q)
      write_csv((edir / (std::to_string(indices[q]) + ".csv")).string(), ens.trajectories[q]);
  }

  json meta;
  meta["system"] = sys.name;
  meta["seed"] = sc.seed;
  meta["n_paths"] = ens.total;
  meta["dt"] = sc.dt;
  meta["T"] = T;
  meta["horizon"] = horizon;
  meta["t0"] = sc.t0;
  meta["x0"] = to_json(x0);
  meta["completed"] = ens.trajectories.size();
  meta["diverged"] = ens.diverged.size();
  meta["diverged_indices"] = ens.diverged;

  const int n = sys.state_dim;
  Vector mean = Vector::Zero(n);
  Vector var = Vector::Zero(n);
  if (!ens.trajectories.empty()) {
    for (const auto& tr : ens.trajectories) mean += tr.states.back();
    mean /= static_cast<double>(ens.trajectories.size());
    for (const auto& tr : ens.trajectories) var += (tr.states.back() - mean).cwiseAbs2();
    if (ens.trajectories.size() > 1) var /= static_cast<double>(ens.trajectories.size() - 1);
  }
  meta["endpoint_mean"] = to_json(mean);
  meta["endpoint_variance"] = to_json(var);

  if (xf) {
    BridgeCriteria crit;
    crit.xf = *xf;
    crit.T = T;
    crit.tol = sc.tol;
    json filter;
    if (first_passage) {
      const auto [lo, hi] = *cfg.system.drift_diffusion.bounds;
      crit.first_passage = FirstPassage{lo, hi, sc.tol_t};
      filter["mode"] = "first_passage";
      filter["bounds"] = {lo, hi};
      filter["tol_t"] = sc.tol_t;
    } else {
      filter["mode"] = "endpoint";
    }
    filter["xf"] = to_json(*xf);
    filter["tol"] = sc.tol;
    const auto kept = ensemble_bridge_filter(ens.trajectories, x0, crit);
    std::vector<std::size_t> kept_idx;
    for (const auto& k : kept)
      for (std::size_t q = 0; q < ens.trajectories.size(); ++q)
        if (ens.trajectories[q].seed == k.seed) {
          kept_idx.push_back(indices[q]);
          break;
        }
    filter["kept"] = kept.size();
    filter["total"] = ens.trajectories.size();
    filter["kept_indices"] = kept_idx;
    if (!kept.empty()) {
      // Mean of the kept paths on a common normalized time axis.
      constexpr int kPoints = 101;
      Trajectory avg;
      std::vector<std::vector<double>> cols;
      for (int c = 0; c < n; ++c) cols.push_back(normalized_grid_mean(kept, kPoints, c));
      for (int q = 0; q < kPoints; ++q) {
        avg.times.push_back(T * q / (kPoints - 1));
        Vector x(n);
        for (int c = 0; c < n; ++c) x(c) = cols[static_cast<std::size_t>(c)][static_cast<std::size_t>(q)];
        avg.states.push_back(x);
      }
      write_csv((dir / "bridge_mean.csv").string(), avg);
    }
    meta["filter"] = std::move(filter);
  }
  write_text((dir / "ensemble_meta.json").string(), dump_json(meta));

  log << "simulate: " << ens.trajectories.size() << "/" << ens.total << " completed, " << ens.diverged.size()
      << " diverged\n";
  return 2 * ens.diverged.size() > ens.total ? kExitNumeric : kExitOk;
}

int cmd_charges(const RunConfig& cfg, const std::string& path_csv, std::ostream& log) {
  const SdeSystem sys = build_system(cfg);
  Trajectory tr;
  try {
    tr = read_csv(path_csv);
    validate(tr);
  } catch (const Error& e) {
    throw ConfigError(path_csv + ": " + e.what());
  }
  if (tr.dim() != sys.state_dim)
    throw ConfigError(path_csv + ": path has dimension " + std::to_string(tr.dim()) + " but system '" + sys.name +
                      "' has dimension " + std::to_string(sys.state_dim));
  if (tr.size() < 3) throw ConfigError(path_csv + ": need at least 3 nodes");
  const DiscretizedPath path(tr.states, tr.times.back() - tr.times.front(), tr.times.front());
  const ChargeSeries cs = charge_series(sys, path, sys.declared_symmetries);
  const auto dir = out_dir(cfg);
  write_charges(dir, cs);
  json j;
  j["system"] = sys.name;
  j["source"] = path_csv;
  j["segments"] = path.segments();
  j["action"] = action(sys, path);
  j["charges"] = charge_summary(cs);
  write_text((dir / "charges.json").string(), dump_json(j));
  log << "charges: " << cs.size() << " segments\n";
  return kExitOk;
}

int cmd_ttime(const RunConfig& cfg, std::ostream& log) {
  const SdeSystem sys = build_system(cfg);
  if (sys.state_dim != 1)
    throw config_error(cfg, cfg.system.line, "ttime needs a 1D system, '" + sys.name + "' has dimension " +
                                                 std::to_string(sys.state_dim));
  if (!sys.autonomous) throw config_error(cfg, cfg.system.line, "ttime needs an autonomous system");
  if (!cfg.ttime) throw config_error(cfg, 1, "ttime needs a [ttime] table");
  const TtimeConfig& tc = *cfg.ttime;
  if (tc.x0 == tc.xf) throw config_error(cfg, tc.line, "ttime needs x0 != xf");

  std::vector<double> energies = tc.energies;
  std::sort(energies.begin(), energies.end());
  std::ostringstream csv;
  csv << "E,t_star\n";
  json rows = json::array();
  std::vector<double> admissible_t;
  bool monotone = true;
  for (double E : energies) {
    json row;
    row["E"] = E;
    try {
      const double ts = transition_time_1d(sys, tc.x0, tc.xf, E);
      csv << format_double(E) << ',' << format_double(ts) << '\n';
      if (!admissible_t.empty() && !(ts < admissible_t.back())) monotone = false;
      admissible_t.push_back(ts);
      row["t_star"] = ts;
    } catch (const InadmissibleEnergyError& e) {
      csv << format_double(E) << ",inadmissible\n";
      row["t_star"] = nullptr;
      row["inadmissible_at"] = e.x();
    }
    rows.push_back(std::move(row));
  }
  const auto dir = out_dir(cfg);
  write_text((dir / "ttime.csv").string(), csv.str());
  json j;
  j["system"] = sys.name;
  j["x0"] = tc.x0;
  j["xf"] = tc.xf;
  j["admissible"] = admissible_t.size();
  j["inadmissible"] = energies.size() - admissible_t.size();
  j["strictly_decreasing"] = monotone;
  j["rows"] = std::move(rows);
  write_text((dir / "ttime.json").string(), dump_json(j));
  log << "ttime: " << admissible_t.size() << "/" << energies.size() << " admissible, "
      << (monotone ? "strictly decreasing" : "NOT strictly decreasing") << '\n';
  return monotone ? kExitOk : kExitNumeric;
}

int cmd_scorefield(const RunConfig& cfg, std::ostream& log) {
  if (cfg.system.kind != "ring")
    throw config_error(cfg, cfg.system.line, "scorefield needs system kind 'ring', got '" + cfg.system.kind + "'");
  const RingParams& p = cfg.system.ring;
  try {
    p.validate();
  } catch (const ArgumentError& e) {
    throw config_error(cfg, cfg.system.line, e.what());
  }
  const ScoreFieldConfig& sf = cfg.scorefield;
  std::ostringstream csv;
  csv << "x,y,sx,sy,logp\n";
  double max_cross = 0.0;
  double max_fd = 0.0;
  constexpr double h = 1e-5;
  for (int iy = 0; iy < sf.ny; ++iy) {
    const double y = sf.ny == 1 ? sf.ymin : sf.ymin + (sf.ymax - sf.ymin) * iy / (sf.ny - 1);
    for (int ix = 0; ix < sf.nx; ++ix) {
      const double x = sf.nx == 1 ? sf.xmin : sf.xmin + (sf.xmax - sf.xmin) * ix / (sf.nx - 1);
      Vector z(2);
      z << x, y;
      const Vector s = ring_score(z, sf.t, p);
      const double lp = ring_log_density(z, sf.t, p);
      csv << format_double(x) << ',' << format_double(y) << ',' << format_double(s(0)) << ',' << format_double(s(1))
          << ',' << format_double(lp) << '\n';
      max_cross = std::max(max_cross, std::abs(x * s(1) - y * s(0)));
      for (int c = 0; c < 2; ++c) {
        Vector zp = z, zm = z;
        zp(c) += h;
        zm(c) -= h;
        const double fd = (ring_log_density(zp, sf.t, p) - ring_log_density(zm, sf.t, p)) / (2.0 * h);
        max_fd = std::max(max_fd, std::abs(fd - s(c)) / std::max(1.0, std::abs(s(c))));
      }
    }
  }
  const auto dir = out_dir(cfg);
  write_text((dir / "score.csv").string(), csv.str());
  json j;
  j["t"] = sf.t;
  j["R"] = p.R;
  j["sigma0"] = p.sigma0;
  j["nx"] = sf.nx;
  j["ny"] = sf.ny;
  j["max_cross_product"] = max_cross;
  j["fd_max_error"] = max_fd;
  write_text((dir / "score_meta.json").string(), dump_json(j));
  log << "scorefield: " << sf.nx * sf.ny << " points, fd error " << format_double(max_fd) << '\n';
  return kExitOk;
}

int cmd_fixedpoints(const RunConfig& cfg, std::ostream& log) {
  const SdeSystem sys = build_system(cfg);
  if (!sys.autonomous) throw config_error(cfg, cfg.system.line, "fixedpoints needs an autonomous system");
  FixedPointSearch search;
  if (cfg.system.kind == "piet") search = cfg.system.piet.search_box();
  if (search.lower.size() == 0) {
    search.lower = Vector::Constant(sys.state_dim, -2.0);
    search.upper = Vector::Constant(sys.state_dim, 2.0);
  }
  if (cfg.fixedpoints.lower) search.lower = *cfg.fixedpoints.lower;
  if (cfg.fixedpoints.upper) search.upper = *cfg.fixedpoints.upper;
  if (search.lower.size() != sys.state_dim || search.upper.size() != sys.state_dim)
    throw config_error(cfg, 1, "fixedpoints box dimension does not match the system");
  search.seeds_per_axis = cfg.fixedpoints.seeds;
  search.tol = cfg.fixedpoints.tol;
  const auto fps = find_fixed_points(sys, search);

  json arr = json::array();
  for (const auto& f : fps) {
    json e;
    e["point"] = to_json(f.point);
    e["stable"] = f.stable;
    e["degenerate"] = f.degenerate;
    e["eigenvalue_real"] = to_json(f.eigenvalue_real);
    arr.push_back(std::move(e));
  }
  json j;
  j["system"] = sys.name;
  j["lower"] = to_json(search.lower);
  j["upper"] = to_json(search.upper);
  j["seeds_per_axis"] = search.seeds_per_axis;
  j["count"] = fps.size();
  j["stable_count"] = stable_only(fps).size();
  j["fixed_points"] = std::move(arr);
  const auto dir = out_dir(cfg);
  write_text((dir / "fixedpoints.json").string(), dump_json(j));
  log << "fixedpoints: " << fps.size() << " found, " << stable_only(fps).size() << " stable\n";
  return kExitOk;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Most likely paths of stochastic systems and their conserved charges"};
  app.require_subcommand(1);
  std::string config_file;
  std::optional<std::string> out_override;
  std::optional<std::uint64_t> seed_override;
  std::string path_csv;
  app.add_option("--config", config_file, "TOML run configuration")->required();
  app.add_option("--out", out_override, "Output directory (overrides [output] dir)");
  app.add_option("--seed", seed_override, "Master seed (overrides the config)");
  auto* mlp = app.add_subcommand("mlp", "Minimize the action between fixed endpoints");
  auto* sim = app.add_subcommand("simulate", "Simulate a raw path ensemble and filter bridges");
  auto* chg = app.add_subcommand("charges", "Recompute charges for an existing path.csv");
  chg->add_option("--path", path_csv, "Trajectory CSV (overrides [charges] path)");
  auto* tt = app.add_subcommand("ttime", "Transition time against energy for a 1D system");
  auto* sf = app.add_subcommand("scorefield", "Ring score field on a grid");
  auto* fp = app.add_subcommand("fixedpoints", "Fixed points of the deterministic dynamics");
  app.fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig cfg = load_config(config_file);
    if (out_override) cfg.out_dir = *out_override;
    if (seed_override) {
      cfg.simulate.seed = *seed_override;
      cfg.optimizer.seed = *seed_override;
    }
    if (mlp->parsed()) return cmd_mlp(cfg, out);
    if (sim->parsed()) return cmd_simulate(cfg, out);
    if (chg->parsed()) {
      if (path_csv.empty()) {
        if (!cfg.charges_path) throw ConfigError(cfg.source + ":1: charges needs --path or [charges] path");
        path_csv = *cfg.charges_path;
      }
      return cmd_charges(cfg, path_csv, out);
    }
    if (tt->parsed()) return cmd_ttime(cfg, out);
    if (sf->parsed()) return cmd_scorefield(cfg, out);
    if (fp->parsed()) return cmd_fixedpoints(cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigurationError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ArgumentError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DimensionError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SymmetryNotApplicableError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitConfig;
}

}  // namespace mlpath::cli
