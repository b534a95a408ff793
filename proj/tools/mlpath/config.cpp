#include "config.hpp"

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace mlpath::cli {
namespace {

class Reader {
public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(int line, const std::string& msg) const {
    std::ostringstream os;
    os << source_ << ':' << line << ": " << msg;
    throw ConfigError(os.str());
  }

  static int line_of(const toml::node& n) { return static_cast<int>(n.source().begin.line); }

  /// Rejects keys outside `allowed` so typos do not silently fall back to defaults.
  void check_keys(const toml::table& t, const std::string& table, std::initializer_list<std::string_view> allowed) const {
    const std::set<std::string_view> ok(allowed);
    for (const auto& [k, v] : t)
      if (!ok.count(k.str())) fail(line_of(v), "unknown key '" + std::string(k.str()) + "' in [" + table + "]");
  }

  std::optional<double> number(const toml::table& t, std::string_view key) const {
    const toml::node* n = t.get(key);
    if (!n) return std::nullopt;
    if (!n->is_number()) fail(line_of(*n), "'" + std::string(key) + "' must be a number");
    return n->value<double>();
  }

  double number_or(const toml::table& t, std::string_view key, double def) const {
    return number(t, key).value_or(def);
  }

  std::optional<std::int64_t> integer(const toml::table& t, std::string_view key) const {
    const toml::node* n = t.get(key);
    if (!n) return std::nullopt;
    if (!n->is_integer()) fail(line_of(*n), "'" + std::string(key) + "' must be an integer");
    return n->value<std::int64_t>();
  }

  std::optional<bool> boolean(const toml::table& t, std::string_view key) const {
    const toml::node* n = t.get(key);
    if (!n) return std::nullopt;
    if (!n->is_boolean()) fail(line_of(*n), "'" + std::string(key) + "' must be true or false");
    return n->value<bool>();
  }

  std::optional<std::string> string(const toml::table& t, std::string_view key) const {
    const toml::node* n = t.get(key);
    if (!n) return std::nullopt;
    if (!n->is_string()) fail(line_of(*n), "'" + std::string(key) + "' must be a string");
    return n->value<std::string>();
  }

  /// Number or array of numbers, as a vector.
  std::optional<Vector> vec(const toml::table& t, std::string_view key, int* line = nullptr) const {
    const toml::node* n = t.get(key);
    if (!n) return std::nullopt;
    if (line) *line = line_of(*n);
    if (n->is_number()) return Vector::Constant(1, *n->value<double>());
    const toml::array* arr = n->as_array();
    if (!arr || arr->empty()) fail(line_of(*n), "'" + std::string(key) + "' must be a number or non-empty array");
    Vector v(static_cast<Eigen::Index>(arr->size()));
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const toml::node& e = (*arr)[i];
      if (!e.is_number()) fail(line_of(e), "'" + std::string(key) + "' entries must be numbers");
      v(static_cast<Eigen::Index>(i)) = *e.value<double>();
    }
    return v;
  }

  std::vector<double> numbers(const toml::table& t, std::string_view key) const {
    auto v = vec(t, key);
    if (!v) return {};
    return {v->data(), v->data() + v->size()};
  }

  const toml::table* table(const toml::table& root, std::string_view key) const {
    const toml::node* n = root.get(key);
    if (!n) return nullptr;
    if (!n->is_table()) fail(line_of(*n), "'" + std::string(key) + "' must be a table");
    return n->as_table();
  }

private:
  std::string source_;
};

int positive_int(const Reader& r, const toml::table& t, std::string_view key, int def, int line) {
  const auto v = r.integer(t, key);
  if (!v) return def;
  if (*v < 1) r.fail(line, "'" + std::string(key) + "' must be >= 1");
  return static_cast<int>(*v);
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source << ':' << e.source().begin.line << ": " << e.description();
    throw ConfigError(os.str());
  }
  Reader r(source);
  r.check_keys(root, "root",
               {"system", "constant_drift", "ou", "piet", "ring", "forward_diffusion", "path", "optimizer", "simulate",
                "ttime", "scorefield", "fixedpoints", "charges", "output"});

  RunConfig cfg;
  cfg.source = source;

  const toml::table* sys = r.table(root, "system");
  if (!sys) r.fail(1, "missing [system] table");
  r.check_keys(*sys, "system", {"kind"});
  cfg.system.line = Reader::line_of(*sys);
  const auto kind = r.string(*sys, "kind");
  if (!kind) r.fail(cfg.system.line, "[system] needs 'kind'");
  cfg.system.kind = *kind;
  static const std::set<std::string> kinds{"constant_drift", "ou", "piet", "ring", "forward_diffusion"};
  if (!kinds.count(cfg.system.kind))
    r.fail(Reader::line_of(*sys->get("kind")), "unknown system kind '" + cfg.system.kind +
                                                   "' (expected constant_drift, ou, piet, ring, forward_diffusion)");

  if (const auto* t = r.table(root, "constant_drift")) {
    r.check_keys(*t, "constant_drift", {"v", "sigma", "bounds"});
    auto& p = cfg.system.drift_diffusion;
    p.v = r.number_or(*t, "v", p.v);
    p.sigma = r.number_or(*t, "sigma", p.sigma);
    if (auto b = r.vec(*t, "bounds")) {
      if (b->size() != 2) r.fail(Reader::line_of(*t->get("bounds")), "'bounds' must be [lower, upper]");
      p.bounds = std::make_pair((*b)(0), (*b)(1));
    }
  }
  if (const auto* t = r.table(root, "ou")) {
    r.check_keys(*t, "ou", {"k", "sigma", "dim"});
    auto& p = cfg.system.ou;
    p.k = r.number_or(*t, "k", p.k);
    p.sigma = r.number_or(*t, "sigma", p.sigma);
    p.dim = positive_int(r, *t, "dim", p.dim, Reader::line_of(*t));
  }
  if (const auto* t = r.table(root, "piet")) {
    r.check_keys(*t, "piet", {"mu0", "A", "I", "c", "n", "tau", "sigma"});
    auto& p = cfg.system.piet;
    p.mu0 = r.number_or(*t, "mu0", p.mu0);
    p.A = r.number_or(*t, "A", p.A);
    p.I = r.number_or(*t, "I", p.I);
    p.c = r.number_or(*t, "c", p.c);
    p.n = r.number_or(*t, "n", p.n);
    p.tau = r.number_or(*t, "tau", p.tau);
    p.sigma = r.number_or(*t, "sigma", p.sigma);
  }
  if (const auto* t = r.table(root, "ring")) {
    r.check_keys(*t, "ring", {"R", "sigma0", "T", "t_min"});
    auto& p = cfg.system.ring;
    p.R = r.number_or(*t, "R", p.R);
    p.sigma0 = r.number_or(*t, "sigma0", p.sigma0);
    p.T = r.number_or(*t, "T", p.T);
    p.t_min = r.number_or(*t, "t_min", 0.01 * p.T);
  }
  if (const auto* t = r.table(root, "forward_diffusion")) {
    r.check_keys(*t, "forward_diffusion", {"dim"});
    cfg.system.forward_dim = positive_int(r, *t, "dim", 1, Reader::line_of(*t));
  }

  if (const auto* t = r.table(root, "path")) {
    r.check_keys(*t, "path", {"x0", "xf", "T", "K", "t_start"});
    PathConfig p;
    p.line = Reader::line_of(*t);
    auto x0 = r.vec(*t, "x0", &p.x0_line);
    auto xf = r.vec(*t, "xf", &p.xf_line);
    if (!x0 || !xf) r.fail(p.line, "[path] needs x0 and xf");
    p.x0 = *x0;
    p.xf = *xf;
    if (cfg.system.kind == "ring")
      p.T = r.number_or(*t, "T", cfg.system.ring.T - cfg.system.ring.t_min);
    else if (auto T = r.number(*t, "T"))
      p.T = *T;
    else
      r.fail(p.line, "[path] needs T");
    if (!(p.T > 0.0)) r.fail(p.line, "[path] T must be positive");
    p.K = positive_int(r, *t, "K", 200, p.line);
    if (p.K < 2) r.fail(p.line, "[path] K must be >= 2");
    p.t_start = r.number_or(*t, "t_start", 0.0);
    cfg.path = p;
  }

  if (const auto* t = r.table(root, "optimizer")) {
    r.check_keys(*t, "optimizer",
                 {"max_iters", "grad_tol", "action_rel_tol", "plateau_window", "memory", "fd_fallback", "precondition",
                  "multi_start", "perturbation", "seed"});
    auto& o = cfg.optimizer;
    const int line = Reader::line_of(*t);
    o.config.max_iters = positive_int(r, *t, "max_iters", o.config.max_iters, line);
    o.config.grad_tol = r.number_or(*t, "grad_tol", o.config.grad_tol);
    o.config.action_rel_tol = r.number_or(*t, "action_rel_tol", o.config.action_rel_tol);
    o.config.plateau_window = positive_int(r, *t, "plateau_window", o.config.plateau_window, line);
    o.config.memory = positive_int(r, *t, "memory", o.config.memory, line);
    o.config.fd_fallback = r.boolean(*t, "fd_fallback").value_or(o.config.fd_fallback);
    o.config.precondition = r.boolean(*t, "precondition").value_or(o.config.precondition);
    o.multi_start = positive_int(r, *t, "multi_start", 1, line);
    o.perturbation = r.number_or(*t, "perturbation", o.perturbation);
    if (auto s = r.integer(*t, "seed")) o.seed = static_cast<std::uint64_t>(*s);
    try {
      o.config.validate();
    } catch (const ArgumentError& e) {
      r.fail(line, e.what());
    }
  }

  if (const auto* t = r.table(root, "simulate")) {
    r.check_keys(*t, "simulate",
                 {"n_paths", "dt", "seed", "threads", "divergence_bound", "x0", "xf", "T", "t0", "tol", "tol_t",
                  "first_passage", "save_paths"});
    auto& s = cfg.simulate;
    cfg.has_simulate = true;
    s.line = Reader::line_of(*t);
    s.n_paths = static_cast<std::size_t>(positive_int(r, *t, "n_paths", static_cast<int>(s.n_paths), s.line));
    s.dt = r.number_or(*t, "dt", s.dt);
    if (!(s.dt > 0.0)) r.fail(s.line, "[simulate] dt must be positive");
    if (auto v = r.integer(*t, "seed")) s.seed = static_cast<std::uint64_t>(*v);
    if (auto v = r.integer(*t, "threads")) {
      if (*v < 0) r.fail(s.line, "[simulate] threads must be >= 0");
      s.threads = static_cast<unsigned>(*v);
    }
    s.divergence_bound = r.number_or(*t, "divergence_bound", s.divergence_bound);
    s.x0 = r.vec(*t, "x0", &s.x0_line);
    s.xf = r.vec(*t, "xf");
    s.T = r.number(*t, "T");
    s.t0 = r.number_or(*t, "t0", 0.0);
    s.tol = r.number_or(*t, "tol", s.tol);
    s.tol_t = r.number_or(*t, "tol_t", s.tol_t);
    s.first_passage = r.boolean(*t, "first_passage").value_or(true);
    s.save_paths = r.boolean(*t, "save_paths").value_or(true);
  }

  if (const auto* t = r.table(root, "ttime")) {
    r.check_keys(*t, "ttime", {"x0", "xf", "energies", "E_min", "E_max", "n"});
    TtimeConfig tt;
    tt.line = Reader::line_of(*t);
    tt.x0 = r.number_or(*t, "x0", cfg.path && cfg.path->x0.size() == 1 ? cfg.path->x0(0) : 0.0);
    tt.xf = r.number_or(*t, "xf", cfg.path && cfg.path->xf.size() == 1 ? cfg.path->xf(0) : 1.0);
    tt.energies = r.numbers(*t, "energies");
    if (tt.energies.empty()) {
      const auto lo = r.number(*t, "E_min");
      const auto hi = r.number(*t, "E_max");
      const int n = positive_int(r, *t, "n", 11, tt.line);
      if (!lo || !hi) r.fail(tt.line, "[ttime] needs 'energies' or E_min/E_max");
      for (int i = 0; i < n; ++i) tt.energies.push_back(n == 1 ? *lo : *lo + (*hi - *lo) * i / (n - 1));
    }
    cfg.ttime = tt;
  }

  if (const auto* t = r.table(root, "scorefield")) {
    r.check_keys(*t, "scorefield", {"t", "xmin", "xmax", "ymin", "ymax", "nx", "ny"});
    auto& s = cfg.scorefield;
    const int line = Reader::line_of(*t);
    s.t = r.number_or(*t, "t", cfg.system.ring.T);
    s.xmin = r.number_or(*t, "xmin", s.xmin);
    s.xmax = r.number_or(*t, "xmax", s.xmax);
    s.ymin = r.number_or(*t, "ymin", s.ymin);
    s.ymax = r.number_or(*t, "ymax", s.ymax);
    s.nx = positive_int(r, *t, "nx", s.nx, line);
    s.ny = positive_int(r, *t, "ny", s.ny, line);
    if (!(s.xmin < s.xmax && s.ymin < s.ymax)) r.fail(line, "[scorefield] ranges must satisfy min < max");
    if (!(s.t >= 0.0)) r.fail(line, "[scorefield] t must be >= 0");
  } else {
    cfg.scorefield.t = cfg.system.ring.T;
  }

  if (const auto* t = r.table(root, "fixedpoints")) {
    r.check_keys(*t, "fixedpoints", {"lower", "upper", "seeds", "tol"});
    auto& f = cfg.fixedpoints;
    f.lower = r.vec(*t, "lower");
    f.upper = r.vec(*t, "upper");
    f.seeds = positive_int(r, *t, "seeds", f.seeds, Reader::line_of(*t));
    f.tol = r.number_or(*t, "tol", f.tol);
  }

  if (const auto* t = r.table(root, "charges")) {
    r.check_keys(*t, "charges", {"path"});
    cfg.charges_path = r.string(*t, "path");
  }

  if (const auto* t = r.table(root, "output")) {
    r.check_keys(*t, "output", {"dir"});
    if (auto d = r.string(*t, "dir")) cfg.out_dir = *d;
  }
  return cfg;
}

RunConfig load_config(const std::string& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw ConfigError(file + ":0: cannot open config file");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), file);
}

SdeSystem build_system(const RunConfig& cfg) {
  const auto fail = [&](const std::string& msg) -> ConfigError {
    return ConfigError(cfg.source + ':' + std::to_string(cfg.system.line) + ": " + msg);
  };
  try {
    const auto& k = cfg.system.kind;
    if (k == "constant_drift") return constant_drift_1d(cfg.system.drift_diffusion);
    if (k == "ou") return isotropic_ou(cfg.system.ou);
    if (k == "piet") return piet_network(cfg.system.piet);
    if (k == "ring") return ring_reverse_sde(cfg.system.ring);
    if (k == "forward_diffusion") return forward_diffusion(cfg.system.forward_dim);
  } catch (const ArgumentError& e) {
    throw fail(e.what());
  } catch (const ConfigurationError& e) {
    throw fail(e.what());
  }
  throw fail("unknown system kind");
}

void validate_against(const RunConfig& cfg, const SdeSystem& sys) {
  const auto fail = [&](int line, const std::string& msg) {
    throw ConfigError(cfg.source + ':' + std::to_string(line) + ": " + msg);
  };
  const auto dim = [&](Eigen::Index n) { return std::to_string(n); };
  if (cfg.path) {
    if (cfg.path->x0.size() != sys.state_dim)
      fail(cfg.path->x0_line, "x0 has dimension " + dim(cfg.path->x0.size()) + " but system '" + sys.name +
                                  "' has dimension " + dim(sys.state_dim));
    if (cfg.path->xf.size() != sys.state_dim)
      fail(cfg.path->xf_line, "xf has dimension " + dim(cfg.path->xf.size()) + " but system '" + sys.name +
                                  "' has dimension " + dim(sys.state_dim));
  }
  if (cfg.has_simulate) {
    if (cfg.simulate.x0 && cfg.simulate.x0->size() != sys.state_dim)
      fail(cfg.simulate.x0_line, "simulate x0 has dimension " + dim(cfg.simulate.x0->size()) + ", expected " +
                                     dim(sys.state_dim));
    if (cfg.simulate.xf && cfg.simulate.xf->size() != sys.state_dim)
      fail(cfg.simulate.line, "simulate xf has dimension " + dim(cfg.simulate.xf->size()) + ", expected " +
                                  dim(sys.state_dim));
  }
}

}  // namespace mlpath::cli
