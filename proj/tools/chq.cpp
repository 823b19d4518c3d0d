// Command line front end for the solver and the experiment harness.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "chq/harness.hpp"

using namespace chq;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config = "configs/desk.ini";
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (!c.out.empty()) cfg.out_dir = c.out;
  if (c.seed) cfg.seed = *c.seed;
  if (c.threads) {
    if (*c.threads < 1) throw Error(Errc::ConfigError, "--threads must be >= 1");
    cfg.threads = *c.threads;
  }
  return cfg;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

int print_checks(const std::vector<CheckRow>& rows) {
  for (const CheckRow& r : rows)
    std::printf("%-7s %2d %-32s measured %-12.4g threshold %-10.4g %s\n", status_name(r.status), r.id, r.name.c_str(),
                r.measured, r.threshold, r.detail.c_str());
  return all_pass(rows) ? 0 : 1;
}

ReportRow row_of(const char* tag, double eps, double a, double mu, const SolveResult& r) {
  ReportRow x;
  x.experiment = tag;
  x.eps = eps;
  x.a = a;
  x.mu = mu;
  x.level = r.level;
  x.lambda = r.lambda;
  x.poho_residual = r.poho_residual;
  x.bary = {NAN, NAN, NAN};
  x.dist_to_M = NAN;
  x.iterations = r.iterations;
  x.converged = r.converged;
  return x;
}

int cmd_validate(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const ExponentSet& e = cfg.exps;
  std::printf("N = %d\ns = %.17g\nalpha = %.17g\nq = %.17g\np = %.17g\np_bar = %.17g\n", e.N, e.s, e.alpha, e.q, e.p,
              e.p_bar);
  std::printf("potential = %s\n", potential_kind_name(cfg.potential.kind));
  std::printf("eps =");
  for (double eps : cfg.eps_list) std::printf(" %.17g", eps);
  std::printf("\nregime ok\n");
  return 0;
}

struct GroundOut {
  SolveResult U;
  double C = 0;
  CriticalSweep S;
};

GroundOut ground(const ExperimentConfig& cfg) {
  GroundOut g;
  g.U = solve_scalar_ground(cfg.exps, cfg.ground_grid, cfg.solver);
  g.C = sharp_constant(cfg.exps, cfg.exps.q, std::sqrt(mass(g.U.field)));
  g.S = compute_S_alpha(cfg.exps, cfg.grid);
  return g;
}

int cmd_constants(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const ExponentSet& e = cfg.exps;
  const GroundOut g = ground(cfg);
  std::printf("p = %.17g\np_bar = %.17g\np_lower = %.17g\ndelta_q = %.17g\ndelta_p = %.17g\ngamma_q = %.17g\n", e.p,
              e.p_bar, e.p_lower, e.delta_q, e.delta_p, e.gamma_q);
  std::printf("sigma = %.17g\ntheta_q = %.17g\n", e.sigma, e.theta_q);
  std::printf("A_N_alpha = %.17g\nC_HLS = %.17g\n", riesz_normalization(e.N, e.alpha), hls_constant(e.N, e.alpha));
  std::printf("norm_U = %.17g\nC_alpha_q = %.17g\n", std::sqrt(mass(g.U.field)), g.C);
  std::printf("S_alpha = %.17g\nS_alpha_closed = %.17g\nS_alpha_spread = %.3g\n", g.S.S_alpha, g.S.S_alpha_closed,
              g.S.spread);
  const double K = e.kq_prefactor * g.C;
  std::printf("K_q = %.17g\n", K);
  try {
    const MassThreshold m = mass_threshold(e, g.S.S_alpha, g.C);
    std::printf("a_max = %.17g\n", m.a_max);
  } catch (const Error& err) {
    std::printf("a_max = nan  # %s\n", err.what());
  }
  std::printf("X_star(a=%.17g) = %.17g\n", cfg.mass, xstar_root(e, g.S.S_alpha, K, cfg.mass));
  return 0;
}

int cmd_groundstate(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const GroundOut g = ground(cfg);
  save_snapshot(g.U.field, out_path(cfg, "U.chqf"));
  write_atomic(out_path(cfg, "U.txt"), solve_sidecar(g.U, cfg.source));
  std::string csv = "# schema chq-critical/1\neps,quotient,extrapolated\n";
  char buf[128];
  for (size_t i = 0; i < g.S.eps.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", g.S.eps[i], g.S.quotient[i],
                  i < g.S.extrapolated.size() ? g.S.extrapolated[i] : NAN);
    csv += buf;
  }
  write_atomic(out_path(cfg, "critical_sweep.csv"), csv);
  std::printf("U: residual %.3g, Pohozaev %.3g, min %.3g\nC_alpha_q = %.17g\nS_alpha = %.17g (closed form %.17g)\n",
              g.U.grad_residual, g.U.poho_residual, g.U.field.values.minCoeff(), g.C, g.S.S_alpha,
              g.S.S_alpha_closed);
  return g.U.converged && g.U.field.values.minCoeff() > 0 ? 0 : 1;
}

int cmd_solve(const Common& c, std::optional<double> eps, int well, bool autonomous) {
  const ExperimentConfig cfg = load(c);
  const ExponentSet& e = cfg.exps;
  const SolveResult w = solve_autonomous(e, autonomous ? cfg.mu : 0.0, cfg.mass, gaussian_init(cfg.grid, cfg.mass),
                                         cfg.solver);
  SolveResult r = w;
  ReportRow row = row_of("solve", 0, cfg.mass, autonomous ? cfg.mu : 0, w);
  if (!autonomous && cfg.potential.kind != PotentialKind::constant) {
    const double ep = eps ? *eps : cfg.eps_list.back();
    const MSet M = detect_M(cfg.potential, cfg.grid, 1.0);
    if (well < 0 || well >= int(M.M.size())) throw Error(Errc::ConfigError, "--well out of range");
    const Potential pot = make_potential(cfg.potential, ep, e.N);
    r = solve_nonautonomous(e, pot, cfg.mass, make_profile(w.field, M.M[well], ep, cfg.mass), cfg.solver);
    row = row_of("solve", ep, cfg.mass, 0, r);
    const double radius = cfg.zeta_radius > 0 ? cfg.zeta_radius : 2 * distance(M.M[well], Point{}, e.N) + 1;
    row.bary = barycenter(r.field, ep, radius);
    row.dist_to_M = distance_to(row.bary, M.M, e.N);
  }
  save_snapshot(r.field, out_path(cfg, "solve.chqf"));
  write_atomic(out_path(cfg, "solve.txt"), solve_sidecar(r, cfg.source));
  write_atomic(out_path(cfg, "solve.csv"), format_report({row}));
  std::fputs(format_row(row).c_str(), stdout);
  return r.converged ? 0 : 1;
}

int cmd_fiber(const Common& c, double tmin, double tmax, int points) {
  const ExperimentConfig cfg = load(c);
  const SolveResult w =
      solve_autonomous(cfg.exps, cfg.mu, cfg.mass, gaussian_init(cfg.grid, cfg.mass), cfg.solver);
  const FiberProfile f = extract_profile(w.field, cfg.exps, cfg.mu);
  std::string csv = "# schema chq-fiber/1\nt,phi,psi\n";
  char buf[128];
  for (const FiberSample& s : fiber_curve(f, tmin, tmax, points)) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", s.t, s.phi, s.psi);
    csv += buf;
  }
  write_atomic(out_path(cfg, "fiber.csv"), csv);
  const FiberMax m = fiber_maximizer(f);
  std::printf("t* = %.17g\nmax = %.17g\nsign changes = %d\n", m.t_star, m.value,
              psi_sign_changes(f, tmin, tmax, points));
  return std::abs(m.t_star - 1) < 1e-6 ? 0 : 1;
}

int cmd_sweep(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const LevelTable t = level_curves(cfg.exps, cfg.masses, cfg.mus, cfg.grid, cfg.solver, cfg.masses.size() > 1);
  std::vector<ReportRow> rows;
  bool ok = t.nonincreasing;
  for (const auto* list : {&t.mass_rows, &t.mu_rows})
    for (const LevelRow& r : *list) {
      ReportRow x;
      x.experiment = list == &t.mass_rows ? "levels.mass" : "levels.mu";
      x.a = r.a;
      x.mu = r.mu;
      x.level = r.level;
      x.lambda = r.lambda;
      x.poho_residual = r.poho_residual;
      x.bary = {NAN, NAN, NAN};
      x.dist_to_M = NAN;
      x.iterations = r.iterations;
      x.converged = r.converged;
      ok = ok && r.converged;
      rows.push_back(x);
    }
  write_atomic(out_path(cfg, "levels.csv"), format_report(rows));
  std::fputs(format_report(rows).c_str(), stdout);
  std::printf("nonincreasing %d, slope %.17g (relative error %.3g)\n", int(t.nonincreasing), t.slope,
              t.slope_rel_error);
  return ok && t.slope_rel_error < 1e-4 ? 0 : 1;
}

void save_cells(const ExperimentConfig& cfg, const std::vector<Cell>& cells, const char* prefix) {
  for (size_t k = 0; k < cells.size(); ++k) {
    const Cell& c = cells[k];
    if (c.result.field.values.size() == 0) continue;
    char name[96];
    std::snprintf(name, sizeof name, "%s_eps%g_well%d", prefix, c.eps, c.well);
    save_snapshot(c.result.field, out_path(cfg, std::string(name) + ".chqf"));
    write_atomic(out_path(cfg, std::string(name) + ".txt"), solve_sidecar(c.result, cfg.source));
  }
}

int cmd_concentrate(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const ConcentrationReport rep = run_concentration(cfg);
  write_atomic(out_path(cfg, "concentration.csv"), format_report(rep.rows));
  write_atomic(out_path(cfg, "concentration_checks.csv"), format_checks(rep.checks));
  save_cells(cfg, rep.cells, "concentration");
  std::fputs(format_report(rep.rows).c_str(), stdout);
  return print_checks(rep.checks);
}

int cmd_multiplicity(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const MultiplicityReport rep = run_multiplicity(cfg);
  write_atomic(out_path(cfg, "multiplicity.csv"), format_report(rep.rows));
  write_atomic(out_path(cfg, "multiplicity_checks.csv"), format_checks(rep.checks));
  save_cells(cfg, {rep.first, rep.second}, "multiplicity");
  std::fputs(format_report(rep.rows).c_str(), stdout);
  return print_checks(rep.checks);
}

int cmd_verify(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const VerifyReport rep = run_verify(cfg);
  write_atomic(out_path(cfg, "verify.csv"), format_checks(rep.checks));
  write_atomic(out_path(cfg, "report.csv"), format_report(rep.rows));
  return print_checks(rep.checks);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Normalized solutions of the fractional Choquard equation: solver and verification lab"};
  app.require_subcommand(1);
  Common c;
  app.add_option("--config", c.config, "experiment config (INI)")->check(CLI::ExistingFile);
  app.add_option("--out", c.out, "output directory (overrides the config)");
  app.add_option("--seed", c.seed, "random seed (overrides the config)");
  app.add_option("--threads", c.threads, "worker threads for experiment cells");

  std::optional<double> eps;
  int well = 0;
  bool autonomous = false;
  double tmin = 1e-2, tmax = 1e2;
  int points = 400;

  auto* validate = app.add_subcommand("validate", "check the regime and the config");
  auto* constants = app.add_subcommand("constants", "exponents and constants, with U and S_alpha computed");
  auto* ground = app.add_subcommand("groundstate", "scalar ground state U and the critical constant sweep");
  auto* solve = app.add_subcommand("solve", "one autonomous or non-autonomous solve");
  solve->add_option("--eps", eps, "slow-variable scale (default: smallest in the config)");
  solve->add_option("--well", well, "index of the well to start from");
  solve->add_flag("--autonomous", autonomous, "solve with the constant mu of the config");
  auto* fiber = app.add_subcommand("fiber", "fiber curve of the autonomous solution");
  fiber->add_option("--tmin", tmin);
  fiber->add_option("--tmax", tmax);
  fiber->add_option("--points", points);
  auto* sweep = app.add_subcommand("sweep", "level curves over masses and mu");
  auto* conc = app.add_subcommand("concentrate", "eps sweep from profiles at every point of M");
  auto* mult = app.add_subcommand("multiplicity", "two distinct solutions in a double well");
  auto* verify = app.add_subcommand("verify", "the full property suite");
  for (auto* s : {validate, constants, ground, solve, fiber, sweep, conc, mult, verify}) s->fallthrough();

  app.require_subcommand(1);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // help and version exit 0; every usage error is a config error
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    if (*validate) return cmd_validate(c);
    if (*constants) return cmd_constants(c);
    if (*ground) return cmd_groundstate(c);
    if (*solve) return cmd_solve(c, eps, well, autonomous);
    if (*fiber) return cmd_fiber(c, tmin, tmax, points);
    if (*sweep) return cmd_sweep(c);
    if (*conc) return cmd_concentrate(c);
    if (*mult) return cmd_multiplicity(c);
    if (*verify) return cmd_verify(c);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == Errc::ConfigError || e.code() == Errc::RegimeViolation ? 2 : 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 2;
}
