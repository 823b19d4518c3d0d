#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "chq/harness.hpp"

namespace chq {

namespace {

namespace pt = boost::property_tree;

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw Error(Errc::ConfigError, key + ": " + why);
}

// Every accepted key; anything else is a typo.
const std::map<std::string, std::set<std::string>> kKeys = {
    {"params", {"N", "s", "alpha", "q"}},
    {"grid", {"points", "extent", "topology"}},
    {"groundstate", {"points", "extent"}},
    {"problem", {"mass", "mu", "eps", "profile_eps"}},
    {"levels", {"masses", "mus"}},
    {"potential", {"kind", "centers", "width", "V_inf", "skew", "file"}},
    {"solver",
     {"step", "grad_tol", "poho_tol", "max_iter", "refine", "precondition", "handoff_tol", "newton_iter",
      "krylov_tol", "krylov_restart", "krylov_max", "R0", "R1"}},
    {"experiment", {"delta_fraction", "zeta_radius", "separation", "delta_target", "out", "seed", "threads"}},
};

class Reader {
 public:
  explicit Reader(const pt::ptree& t) : t_(t) {}

  template <typename T>
  T get(const std::string& key, T fallback) const {
    const auto v = t_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
    if (!v) return fallback;
    return parse<T>(key, *v);
  }
  template <typename T>
  T need(const std::string& key) const {
    const auto v = t_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
    if (!v) bad(key, "missing");
    return parse<T>(key, *v);
  }
  bool has(const std::string& key) const { return bool(t_.get_optional<std::string>(key)); }

  std::vector<double> list(const std::string& key, std::vector<double> fallback) const {
    const auto v = t_.get_optional<std::string>(key);
    if (!v) return fallback;
    std::vector<double> out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse<double>(key, item));
    if (out.empty()) bad(key, "empty list");
    return out;
  }

  // Points separated by commas, coordinates by blanks.
  std::vector<Point> points(const std::string& key, int N) const {
    std::vector<Point> out;
    const auto v = t_.get_optional<std::string>(key);
    if (!v) return out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::stringstream ps(item);
      Point p{};
      int d = 0;
      std::string c;
      while (ps >> c) {
        if (d >= N) bad(key, "point with more than N coordinates");
        p[d++] = parse<double>(key, c);
      }
      if (d != N) bad(key, "point needs N coordinates");
      out.push_back(p);
    }
    return out;
  }

 private:
  template <typename T>
  static T parse(const std::string& key, const std::string& raw) {
    std::string s = raw;
    const auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    if constexpr (std::is_same_v<T, std::string>) {
      return s;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (s == "true" || s == "1" || s == "yes") return true;
      if (s == "false" || s == "0" || s == "no") return false;
      bad(key, "expected a boolean, got '" + s + "'");
    } else {
      std::istringstream is(s);
      T v{};
      is >> v;
      if (!is || !is.eof()) bad(key, "cannot parse '" + s + "'");
      if constexpr (std::is_floating_point_v<T>)
        if (!std::isfinite(v)) bad(key, "not finite");
      return v;
    }
  }

  const pt::ptree& t_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(Errc::ConfigError, std::string("line ") + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    const auto it = kKeys.find(section);
    if (it == kKeys.end() || body.data().size())
      throw Error(Errc::ConfigError, "unknown section or top-level key '" + section + "'");
    for (const auto& kv : body)
      if (!it->second.count(kv.first)) bad(section + "." + kv.first, "unknown key");
  }

  const Reader r(tree);
  ExperimentConfig c;
  c.source = text;
  c.exps = validate_regime(r.get<int>("params.N", 1), r.get<double>("params.s", 0.4),
                           r.get<double>("params.alpha", 0.5), r.get<double>("params.q", 3.0));
  const int N = c.exps.N;
  try {
    c.grid = make_grid(N, r.get<int>("grid.points", 4096), r.get<double>("grid.extent", 1024.0),
                       parse_topology(r.get<std::string>("grid.topology", "isolated")));
    c.ground_grid = make_grid(N, r.get<int>("groundstate.points", 4096), r.get<double>("groundstate.extent", 64.0),
                              c.grid.topology);
  } catch (const Error& e) {
    throw Error(Errc::ConfigError, std::string("grid: ") + e.what());
  }

  c.mass = r.get<double>("problem.mass", 2.0);
  if (!(c.mass > 0)) bad("problem.mass", "must be positive");
  c.mu = r.get<double>("problem.mu", 0.0);
  c.eps_list = r.list("problem.eps", {0.4, 0.2, 0.1});
  for (size_t i = 0; i < c.eps_list.size(); ++i) {
    if (!(c.eps_list[i] > 0)) bad("problem.eps", "entries must be positive");
    if (i > 0 && !(c.eps_list[i] < c.eps_list[i - 1])) bad("problem.eps", "must be strictly decreasing");
  }
  c.profile_eps = r.list("problem.profile_eps", {0.2, 0.1, 0.05, 0.025});
  for (size_t i = 0; i < c.profile_eps.size(); ++i) {
    if (!(c.profile_eps[i] > 0)) bad("problem.profile_eps", "entries must be positive");
    if (i > 0 && !(c.profile_eps[i] < c.profile_eps[i - 1])) bad("problem.profile_eps", "must be strictly decreasing");
  }
  c.masses = r.list("levels.masses", {2, 4, 6, 8});
  for (double a : c.masses)
    if (!(a > 0)) bad("levels.masses", "entries must be positive");
  c.mus = r.list("levels.mus", {0, 0.5, 1});

  PotentialSpec& p = c.potential;
  p.kind = parse_potential_kind(r.get<std::string>("potential.kind", "double_well"));
  p.centers = r.points("potential.centers", N);
  p.width = r.get<double>("potential.width", 4.0);
  p.V_inf = r.get<double>("potential.V_inf", 0.25);
  p.skew = r.get<double>("potential.skew", 0.0);
  p.file = r.get<std::string>("potential.file", "");
  validate(p, N);

  SolveConfig& s = c.solver;
  s.step = r.get("solver.step", s.step);
  s.grad_tol = r.get("solver.grad_tol", s.grad_tol);
  s.poho_tol = r.get("solver.poho_tol", s.poho_tol);
  s.max_iter = r.get("solver.max_iter", s.max_iter);
  s.refine = r.get("solver.refine", s.refine);
  s.precondition = r.get("solver.precondition", s.precondition);
  s.handoff_tol = r.get("solver.handoff_tol", s.handoff_tol);
  s.newton_iter = r.get("solver.newton_iter", s.newton_iter);
  s.krylov_tol = r.get("solver.krylov_tol", s.krylov_tol);
  s.krylov_restart = r.get("solver.krylov_restart", s.krylov_restart);
  s.krylov_max = r.get("solver.krylov_max", s.krylov_max);
  if (r.has("solver.R0") != r.has("solver.R1")) bad("solver.R0", "R0 and R1 come together");
  if (r.has("solver.R0")) {
    const double R0 = r.need<double>("solver.R0"), R1 = r.need<double>("solver.R1");
    if (!(R0 > 0 && R1 > R0)) bad("solver.R0", "truncation radii must satisfy 0 < R0 < R1");
    s.trunc = make_truncation(R0, R1);
  }
  // a zero budget parses; run_verify turns it into skipped checks
  if (s.max_iter < 0) bad("solver.max_iter", "must be >= 0");
  if (s.max_iter > 0) validate(s);

  c.delta_fraction = r.get("experiment.delta_fraction", c.delta_fraction);
  if (!(c.delta_fraction > 0 && c.delta_fraction < 0.5)) bad("experiment.delta_fraction", "must lie in (0, 0.5)");
  c.zeta_radius = r.get("experiment.zeta_radius", c.zeta_radius);
  if (c.zeta_radius < 0) bad("experiment.zeta_radius", "must be >= 0");
  c.separation = r.get("experiment.separation", c.separation);
  c.delta_target = r.get("experiment.delta_target", c.delta_target);
  if (!(c.separation > 0 && c.delta_target > 0)) bad("experiment", "separation and delta_target must be positive");
  c.out_dir = r.get<std::string>("experiment.out", c.out_dir);
  c.seed = r.get<std::uint64_t>("experiment.seed", c.seed);
  c.threads = r.get("experiment.threads", c.threads);
  if (c.threads < 1) bad("experiment.threads", "must be >= 1");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::ConfigError, "cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace chq
