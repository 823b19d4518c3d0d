#include <algorithm>
#include <cmath>

#include "chq/harness.hpp"

namespace chq {

namespace {

CheckRow check(const std::string& name, bool ok, double measured, double threshold, std::string detail = {}) {
  return CheckRow{0, name, ok ? Status::pass : Status::fail, measured, threshold, std::move(detail)};
}

CheckRow skipped(const std::string& name, std::string why) {
  return CheckRow{0, name, Status::skipped, 0, 0, std::move(why)};
}

double max_norm(const Point& y, int N) {
  double r = 0;
  for (int d = 0; d < N; ++d) r = std::max(r, std::abs(y[d]));
  return r;
}

struct Setup {
  MSet M;
  double zeta_radius = 0;
};

Setup setup(const ExperimentConfig& cfg) {
  const int N = cfg.exps.N;
  Setup s;
  s.M = detect_M(cfg.potential, cfg.grid, 1.0);
  const double delta = default_delta(cfg.potential, s.M, cfg.delta_fraction);
  s.M = detect_M(cfg.potential, cfg.grid, delta);
  double reach = 0;
  for (const Point& m : s.M.M) reach = std::max(reach, distance(m, Point{}, N) + delta);
  s.zeta_radius = cfg.zeta_radius > 0 ? cfg.zeta_radius : reach;
  if (s.zeta_radius < reach)
    throw Error(Errc::ConfigError, "zeta_radius " + std::to_string(s.zeta_radius) + " does not enclose M_delta (" +
                                       std::to_string(reach) + ")");
  return s;
}

SolveResult ground_solve(const ExperimentConfig& cfg) {
  return solve_autonomous(cfg.exps, 0.0, cfg.mass, gaussian_init(cfg.grid, cfg.mass), cfg.solver);
}

void solve_cell(const ExperimentConfig& cfg, const Field& w, const Setup& s, Cell& c, const char* experiment) {
  const Potential pot = make_potential(cfg.potential, c.eps, cfg.exps.N);
  try {
    c.result = solve_nonautonomous(cfg.exps, pot, cfg.mass, make_profile(w, c.start, c.eps, cfg.mass), cfg.solver);
  } catch (const SolveFailure& f) {
    c.result = f.partial();
    c.error = f.what();
  } catch (const Error& e) {
    c.error = e.what();
  }
  ReportRow& r = c.row;
  r.experiment = experiment;
  r.eps = c.eps;
  r.a = cfg.mass;
  r.mu = 0;
  r.level = c.result.level;
  r.lambda = c.result.lambda;
  r.poho_residual = c.result.poho_residual;
  r.iterations = c.result.iterations;
  r.converged = c.error.empty() && c.result.converged;
  if (c.result.field.values.size() > 0) {
    r.bary = barycenter(c.result.field, c.eps, s.zeta_radius);
    r.dist_to_M = distance_to(r.bary, s.M.M, cfg.exps.N);
  } else {
    r.bary = {NAN, NAN, NAN};
    r.dist_to_M = NAN;
  }
}

}  // namespace

ConcentrationReport run_concentration(const ExperimentConfig& cfg) {
  validate(cfg.solver);
  ConcentrationReport rep;
  if (cfg.potential.kind == PotentialKind::constant) {
    rep.checks.push_back(skipped("concentration", "constant potential: M is empty or the whole space"));
    return rep;
  }
  if (cfg.eps_list.size() < 3) throw Error(Errc::ConfigError, "concentration needs at least three eps values");
  const Setup s = setup(cfg);
  rep.M = s.M;
  rep.zeta_radius = s.zeta_radius;
  if (s.M.degenerate) {
    rep.checks.push_back(skipped("concentration", "degenerate M"));
    return rep;
  }
  rep.ground = ground_solve(cfg);
  const int nw = int(s.M.M.size());
  for (double eps : cfg.eps_list)
    for (int i = 0; i < nw; ++i) {
      Cell c;
      c.eps = eps;
      c.well = i;
      c.start = s.M.M[i];
      rep.cells.push_back(c);
    }
  parallel_for(int(rep.cells.size()), cfg.threads,
               [&](int k) { solve_cell(cfg, rep.ground.field, s, rep.cells[k], "concentration"); });

  ReportRow g;
  g.experiment = "ground";
  g.a = cfg.mass;
  g.level = rep.ground.level;
  g.lambda = rep.ground.lambda;
  g.poho_residual = rep.ground.poho_residual;
  g.bary = {NAN, NAN, NAN};
  g.dist_to_M = NAN;
  g.iterations = rep.ground.iterations;
  g.converged = rep.ground.converged;
  rep.rows.push_back(g);
  for (const Cell& c : rep.cells) rep.rows.push_back(c.row);

  const double b0 = rep.ground.level;
  const int ne = int(cfg.eps_list.size());
  for (int i = 0; i < nw; ++i) {
    const std::string tag = "well " + std::to_string(i);
    bool conv = true, mono = true, gap_mono = true;
    double worst_rise = 0;
    std::string dists;
    for (int k = 0; k < ne; ++k) {
      const Cell& c = rep.cells[size_t(k * nw + i)];
      conv = conv && c.row.converged;
      dists += (k ? " " : "") + std::to_string(c.row.dist_to_M);
      if (k > 0) {
        const Cell& p = rep.cells[size_t((k - 1) * nw + i)];
        if (!(c.row.dist_to_M <= p.row.dist_to_M)) mono = false;
        worst_rise = std::max(worst_rise, c.row.dist_to_M - p.row.dist_to_M);
        if (!(std::abs(c.row.level - b0) < std::abs(p.row.level - b0))) gap_mono = false;
      }
    }
    const Cell& last = rep.cells[size_t((ne - 1) * nw + i)];
    rep.checks.push_back(check("concentration.converged " + tag, conv, conv ? 1 : 0, 1));
    rep.checks.push_back(check("concentration.monotone " + tag, conv && mono, worst_rise, 0, "dist " + dists));
    rep.checks.push_back(check("concentration.final " + tag, conv && last.row.dist_to_M < cfg.delta_target,
                               last.row.dist_to_M, cfg.delta_target));
    rep.checks.push_back(check("concentration.level_gap " + tag, conv && gap_mono,
                               std::abs(last.row.level - b0), 0, "gap to b0 decreases"));
  }
  return rep;
}

double aligned_distance(const Field& u, const Field& v, double s, int* shift) {
  require_same_grid(u.grid, v.grid);
  const Grid& g = u.grid;
  std::array<int, 3> best{0, 0, 0};
  if (g.N == 1) {
    // maximize the H^s pairing <u, T_k v>; the shift commutes with the multiplier
    // up to the wrap of negligible tails
    const Eigen::VectorXd w = v.values + fractional_laplacian(v, s).values;
    const int n = g.points;
    double top = -INFINITY;
    for (int k = -n / 2; k < n / 2; ++k) {
      double acc = 0;
      for (int j = 0; j < n; ++j) acc += u.values[j] * w[((j - k) % n + n) % n];
      if (acc > top) top = acc, best[0] = k;
    }
  } else {
    const Point cu = mass_centre(u), cv = mass_centre(v);
    for (int d = 0; d < g.N; ++d) best[d] = int(std::lround((cu[d] - cv[d]) / g.spacing()));
  }
  if (shift) *shift = best[0];
  const Field tv = translate_cells(v, best);
  const Field diff = make_field(g, u.values - tv.values);
  return hs_norm(diff, s) / std::max(hs_norm(u, s), hs_norm(v, s));
}

MultiplicityReport run_multiplicity(const ExperimentConfig& cfg, const ConcentrationReport* conc) {
  validate(cfg.solver);
  if (cfg.potential.kind != PotentialKind::double_well)
    throw Error(Errc::ConfigError, "multiplicity needs a double_well potential");
  const int N = cfg.exps.N;
  const Setup s = setup(cfg);
  MultiplicityReport rep;
  rep.eps = cfg.eps_list.back();
  Cell cells[2];
  for (int i = 0; i < 2; ++i) {
    cells[i].eps = rep.eps;
    cells[i].well = i;
    cells[i].start = s.M.M[i];
  }
  bool reused = false;
  if (conc && conc->M.M == s.M.M) {
    int found = 0;
    for (const Cell& c : conc->cells)
      if (c.eps == rep.eps) cells[c.well] = c, ++found;
    reused = found == 2;
  }
  if (!reused) {
    const SolveResult w = ground_solve(cfg);
    parallel_for(2, cfg.threads, [&](int i) { solve_cell(cfg, w.field, s, cells[i], "multiplicity"); });
  }
  for (Cell& c : cells) {
    c.row.experiment = "multiplicity";
    rep.rows.push_back(c.row);
  }
  rep.first = cells[0];
  rep.second = cells[1];
  const ReportRow &r1 = cells[0].row, &r2 = cells[1].row;
  const bool conv = r1.converged && r2.converged;
  rep.checks.push_back(check("multiplicity.converged", conv, conv ? 1 : 0, 1));
  if (!conv) {
    rep.indistinct = true;
    return rep;
  }
  const Field &u1 = cells[0].result.field, &u2 = cells[1].result.field;

  const int w1 = nearest(r1.bary, s.M.M, N), w2 = nearest(r2.bary, s.M.M, N);
  const double d1 = distance_to(r1.bary, s.M.M, N), d2 = distance_to(r2.bary, s.M.M, N);
  const bool wells = w1 != w2 && distance(s.M.M[w1], s.M.M[w2], N) > 0;
  rep.checks.push_back(check("multiplicity.wells", wells && d1 <= s.M.delta && d2 <= s.M.delta, std::max(d1, d2),
                             s.M.delta, "nearest wells " + std::to_string(w1) + " " + std::to_string(w2)));

  rep.separation = aligned_distance(u1, u2, cfg.exps.s, &rep.alignment);
  rep.indistinct = !(rep.separation > cfg.separation) || !wells;
  rep.checks.push_back(check("multiplicity.separation", !rep.indistinct, rep.separation, cfg.separation,
                             rep.indistinct ? "Indistinct" : "aligned by " + std::to_string(rep.alignment) + " cells"));

  rep.level_gap = std::abs(r1.level - r2.level);
  const double tol = 1e-4 * (1 + std::abs(r1.level));
  rep.checks.push_back(check("multiplicity.levels", rep.level_gap <= tol, rep.level_gap, tol));
  rep.checks.push_back(check("multiplicity.lambda", r1.lambda < 0 && r2.lambda < 0, std::max(r1.lambda, r2.lambda), 0));

  // mirror images of each other when the wells are symmetric about the origin
  Point mid{};
  for (int d = 0; d < N; ++d) mid[d] = 0.5 * (s.M.M[0][d] + s.M.M[1][d]);
  if (N == 1 && max_norm(mid, N) == 0) {
    const Eigen::VectorXd mirrored = u2.values.reverse();
    rep.mirror_defect = (u1.values - mirrored).norm() / u1.values.norm();
    rep.checks.push_back(check("multiplicity.mirror", rep.mirror_defect < 1e-6, rep.mirror_defect, 1e-6));
  } else {
    rep.checks.push_back(skipped("multiplicity.mirror", "wells not symmetric about the origin"));
  }
  return rep;
}

}  // namespace chq
