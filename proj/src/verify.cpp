#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <optional>
#include <random>

#include "chq/harness.hpp"
#include "chq/random.hpp"

namespace chq {

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::mt19937_64 stream(std::uint64_t seed, int id) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(id)};
  return std::mt19937_64(seq);
}

CheckRow row(int id, const char* name, bool ok, double measured, double threshold, std::string detail = {}) {
  return CheckRow{id, name, ok ? Status::pass : Status::fail, measured, threshold, std::move(detail)};
}

std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

// Riesz potential of a narrow Gaussian against the O(n^2) corrected trapezoid
// for A|x|^{-beta}: drop the singular node and add the zeta end correction
// -2 zeta(beta) h^{1-beta} rho_i.
CheckRow riesz_oracle(const ExponentSet& e) {
  const int n = 4096;
  const Grid g = make_grid(1, n, 40.0);
  const Field rho = sample(g, [](const Point& x) { return std::exp(-x[0] * x[0] / 2); });
  const double edge = std::max(rho.values[0], rho.values[n - 1]);
  const double alpha = e.alpha, beta = 1 - alpha, h = g.spacing(), A = riesz_normalization(1, alpha);
  const Field phi = riesz_potential(rho, alpha);
  double worst = 0;
  // interior: the middle half of the box
  for (int i = n / 4; i < 3 * n / 4; ++i) {
    double acc = 0;
    const double xi = g.coord(i);
    for (int j = 0; j < n; ++j)
      if (j != i) acc += rho.values[j] * std::pow(std::abs(xi - g.coord(j)), -beta);
    const double ref = A * (h * acc - 2 * std::riemann_zeta(beta) * std::pow(h, 1 - beta) * rho.values[i]);
    worst = std::max(worst, std::abs(phi.values[i] - ref) / std::abs(ref));
  }
  return row(1, "riesz_oracle", worst < 1e-4 && edge < 1e-12, worst, 1e-4, "boundary " + fmt(edge));
}

RandomFieldOptions positive_band() {
  RandomFieldOptions o;
  o.positive = true;
  o.band_fraction = 0.1;
  return o;
}

CheckRow fiber_consistency(const ExperimentConfig& cfg) {
  auto rng = stream(cfg.seed, 2);
  const Grid g = make_grid(1, 1024, 48.0);
  const Potential pot = Potential::constant(cfg.mu);
  double worst = 0;
  for (int k = 0; k < 20; ++k) {
    const Field u = random_field(g, rng, positive_band());
    const FiberProfile f = extract_profile(u, cfg.exps, cfg.mu);
    for (double t : {0.5, 0.8, 1.25, 2.0}) {
      const double phi = fiber_value(f, t);
      worst = std::max(worst, std::abs(phi - energy(dilate(u, t), cfg.exps, pot).total) / std::abs(phi));
    }
  }
  return row(2, "fiber_consistency", worst < 1e-7, worst, 1e-7, "20 fields x 4 dilations");
}

CheckRow truncation_identity(const ExperimentConfig& cfg) {
  const ExponentSet& e = cfg.exps;
  auto rng = stream(cfg.seed, 8);
  std::uniform_real_distribution<double> T(0.6, 1.6);
  const Grid g = make_grid(1, 1024, 48.0);
  double worst = 0;
  for (int k = 0; k < 10; ++k) {
    const Field u = random_field(g, rng, positive_band());
    const FiberProfile f = extract_profile(u, e, cfg.mu);
    auto R = [&](double t) { return std::sqrt(std::pow(t, 2 * e.s) * f.A + f.a); };
    // radii straddle the sampled range so tau is switching
    const Truncation tr = make_truncation(0.95 * R(0.6), 1.05 * R(1.6));
    const double t = T(rng), h = 1e-4;
    const double fd = (truncated_fiber_value(f, t + h, tr) - truncated_fiber_value(f, t - h, tr)) / (2 * h);
    const double rhs = 0.5 * std::pow(t, 2 * e.s - 1) * pohozaev_truncated(u, t, e, tr);
    worst = std::max(worst, rel(fd, rhs));
  }
  return row(8, "truncation_identity", worst < 1e-6, worst, 1e-6, "10 (u, t) pairs");
}

// Profiles of actual fields with random amplitude and sign structure; with
// free log-uniform coefficients the root can sit outside the window.
CheckRow psi_uniqueness(const ExperimentConfig& cfg) {
  auto rng = stream(cfg.seed, 9);
  std::uniform_real_distribution<double> L(-1, 1), M(0, 2);
  const Grid g = make_grid(1, 1024, 48.0);
  int bad = 0;
  double lo = INFINITY, hi = 0;
  for (int k = 0; k < 100; ++k) {
    Field u = random_field(g, rng);
    u.values *= std::exp(L(rng));
    const FiberProfile f = extract_profile(u, cfg.exps, M(rng));
    if (psi_sign_changes(f, 1e-6, 1e6, 1000) != 1) ++bad;
    const double t = fiber_maximizer(f).t_star;
    lo = std::min(lo, t), hi = std::max(hi, t);
  }
  return row(9, "psi_uniqueness", bad == 0, bad, 0, "roots in [" + fmt(lo) + ", " + fmt(hi) + "]");
}

struct LevelChecks {
  LevelTable table;
  std::vector<ReportRow> rows;
};

LevelChecks levels(const ExperimentConfig& cfg) {
  LevelChecks out;
  out.table = level_curves(cfg.exps, cfg.masses, cfg.mus, cfg.grid, cfg.solver, cfg.masses.size() > 1 ? 1 : 0);
  auto add = [&](const char* tag, const LevelRow& r) {
    ReportRow x;
    x.experiment = tag;
    x.a = r.a;
    x.mu = r.mu;
    x.level = r.level;
    x.lambda = r.lambda;
    x.poho_residual = r.poho_residual;
    x.bary = {NAN, NAN, NAN};
    x.dist_to_M = NAN;
    x.iterations = r.iterations;
    x.converged = r.converged;
    out.rows.push_back(x);
  };
  for (const LevelRow& r : out.table.mass_rows) add("levels.mass", r);
  for (const LevelRow& r : out.table.mu_rows) add("levels.mu", r);
  return out;
}

std::vector<ReportRow> experiment_rows(const LevelChecks& lv, const ConcentrationReport& conc,
                                       const MultiplicityReport& mult) {
  std::vector<ReportRow> rows = lv.rows;
  rows.insert(rows.end(), conc.rows.begin(), conc.rows.end());
  rows.insert(rows.end(), mult.rows.begin(), mult.rows.end());
  return rows;
}

}  // namespace

VerifyReport run_verify(const ExperimentConfig& cfg) {
  const ExponentSet& e = cfg.exps;
  VerifyReport rep;
  auto& out = rep.checks;

  out.push_back(riesz_oracle(e));
  out.push_back(fiber_consistency(cfg));

  const bool can_solve = cfg.solver.max_iter > 0;
  auto skip = [&](int id, const char* name) {
    out.push_back(CheckRow{id, name, Status::skipped, 0, 0, "zero iteration budget"});
  };

  // 3-6: the autonomous level table
  std::optional<LevelChecks> lv;
  if (can_solve) lv = levels(cfg);
  if (lv) {
    std::vector<const LevelRow*> all;
    for (const auto& r : lv->table.mass_rows) all.push_back(&r);
    for (const auto& r : lv->table.mu_rows) all.push_back(&r);
    int failed = 0;
    double worst_p = 0, worst_l = 0, worst_gap = -INFINITY;
    std::string why;
    for (const LevelRow* r : all) {
      if (!r->converged) {
        ++failed;
        why = r->error;
        continue;
      }
      worst_p = std::max(worst_p, r->poho_residual);
      // lambda a = mu a - ((N + alpha) - (N - 2s) q) / (2 s q) B_q at P = 0
      const double closed = r->mu - ((e.N + e.alpha) - (e.N - 2 * e.s) * e.q) / (2 * e.s * e.q) * r->hartree_q / r->a;
      worst_l = std::max(worst_l, rel(r->lambda, closed));
      worst_gap = std::max(worst_gap, r->lambda - r->mu);
    }
    const std::string tail = failed ? std::to_string(failed) + " unconverged: " + why : std::to_string(all.size()) + " solves";
    out.push_back(row(3, "pohozaev_certificate", !failed && worst_p < 1e-6, worst_p, 1e-6, tail));
    out.push_back(row(4, "multiplier_law", !failed && worst_l < 1e-6 && worst_gap < 0, worst_l, 1e-6,
                      "max lambda - mu " + fmt(worst_gap)));

    const auto& mu_rows = lv->table.mu_rows;
    double worst_shift = 0;
    bool shift_ok = !mu_rows.empty() && mu_rows[0].converged && mu_rows[0].mu == 0;
    for (const LevelRow& r : mu_rows) {
      if (r.mu == 0) continue;
      if (!r.converged || !shift_ok) {
        shift_ok = false;
        continue;
      }
      worst_shift = std::max(worst_shift, rel(r.level - mu_rows[0].level, r.mu * r.a / 2));
    }
    out.push_back(row(5, "affine_level_shift", shift_ok && worst_shift < 1e-4, worst_shift, 1e-4,
                      "slope error " + fmt(lv->table.slope_rel_error)));

    double rise = -INFINITY;
    const auto& mr = lv->table.mass_rows;
    for (size_t i = 1; i < mr.size(); ++i) rise = std::max(rise, mr[i].level - mr[i - 1].level);
    out.push_back(row(6, "mass_monotonicity", lv->table.nonincreasing, rise, 1e-6,
                      std::to_string(mr.size()) + " masses"));
  } else {
    skip(3, "pohozaev_certificate");
    skip(4, "multiplier_law");
    skip(5, "affine_level_shift");
    skip(6, "mass_monotonicity");
  }

  // 7: interpolation inequalities
  if (can_solve) {
    try {
      const SolveResult U = solve_scalar_ground(e, cfg.ground_grid, cfg.solver);
      const double C = sharp_constant(e, e.q, std::sqrt(mass(U.field)));
      const CriticalSweep S = compute_S_alpha(e, cfg.grid);
      double tight = 0;
      for (double t : {1.0, 1.25, 1.5}) {
        const Field d = t == 1 ? U.field : dilate(U.field, t, DilateOptions{1e-8});
        tight = std::max(tight, subcritical_quotient(d, e) / C);
      }
      auto rng = stream(cfg.seed, 7);
      const Grid g = make_grid(1, 1024, 48.0);
      int violations = 0;
      for (int k = 0; k < 200; ++k) {
        const Field u = random_field(g, rng);
        if (subcritical_quotient(u, e) > C * (1 + 1e-3)) ++violations;
        if (critical_quotient(u, e) < S.S_alpha * (1 - 1e-3)) ++violations;
      }
      out.push_back(row(7, "interpolation_inequalities", violations == 0 && tight >= 0.99, tight, 0.99,
                        std::to_string(violations) + " violations; C " + fmt(C) + " S " + fmt(S.S_alpha)));
    } catch (const std::exception& ex) {
      out.push_back(row(7, "interpolation_inequalities", false, NAN, 0.99, ex.what()));
    }
  } else {
    skip(7, "interpolation_inequalities");
  }

  out.push_back(truncation_identity(cfg));
  out.push_back(psi_uniqueness(cfg));

  if (!can_solve) {
    skip(10, "profile_energy_barycenter");
    skip(11, "concentration_multiplicity");
    skip(12, "determinism_io");
    return rep;
  }

  ConcentrationReport conc;
  MultiplicityReport mult;
  std::string conc_error;
  try {
    conc = run_concentration(cfg);
    mult = run_multiplicity(cfg, &conc);
  } catch (const std::exception& ex) {
    conc_error = ex.what();
  }

  // 10: profiles Phi_eps(y) at every y in M, over the profile sweep; the gaps on
  // the concentration sweep are reported alongside
  if (conc_error.empty() && !conc.M.M.empty()) {
    const double b0 = conc.ground.level;
    const Field& w = conc.ground.field;
    double worst_b = 0;
    bool bary_ok = true, gap_ok = true;
    auto sweep = [&](const std::vector<double>& eps_list, bool judged) {
      std::string gaps;
      for (size_t i = 0; i < conc.M.M.size(); ++i) {
        double prev = INFINITY;
        for (double eps : eps_list) {
          const Point& y = conc.M.M[i];
          const Field phi = make_profile(w, y, eps, cfg.mass);
          const Point b = barycenter(phi, eps, conc.zeta_radius);
          const double off = distance(b, y, e.N), bound = 2 * eps * profile_radius(eps);
          worst_b = std::max(worst_b, off / bound);
          bary_ok = bary_ok && off <= bound;
          const double J = energy(phi, e, make_potential(cfg.potential, eps, e.N), cfg.solver.trunc).total;
          const double gap = std::abs(J - b0);
          if (i == 0) gaps += (gaps.empty() ? "" : " ") + fmt(gap);
          if (judged) gap_ok = gap_ok && gap < prev;
          prev = gap;
        }
      }
      return gaps;
    };
    const std::string judged = sweep(cfg.profile_eps, true), info = sweep(cfg.eps_list, false);
    out.push_back(row(10, "profile_energy_barycenter", bary_ok && gap_ok, worst_b, 1,
                      "offset / 2 eps R_eps; gaps " + judged + " (concentration eps: " + info + ")"));
  } else {
    out.push_back(row(10, "profile_energy_barycenter", false, NAN, 1, conc_error.empty() ? "empty M" : conc_error));
  }

  // 11: concentration plus two distinct solutions
  if (conc_error.empty()) {
    bool ok = true;
    std::string failed;
    for (const auto* list : {&conc.checks, &mult.checks})
      for (const CheckRow& c : *list)
        if (c.status != Status::pass) ok = false, failed += (failed.empty() ? "" : "; ") + c.name;
    double worst = 0;
    for (const Cell& c : conc.cells)
      if (c.eps == cfg.eps_list.back()) worst = std::max(worst, c.row.dist_to_M);
    out.push_back(row(11, "concentration_multiplicity", ok, worst, cfg.delta_target,
                      ok ? "separation " + fmt(mult.separation) + " level gap " + fmt(mult.level_gap)
                         : "failed " + failed));
  } else {
    out.push_back(row(11, "concentration_multiplicity", false, NAN, cfg.delta_target, conc_error));
  }

  // 12: re-run from config and seed, snapshot round trip, certificates from snapshots
  if (conc_error.empty()) {
    try {
      const std::vector<ReportRow> first = experiment_rows(*lv, conc, mult);
      const LevelChecks lv2 = levels(cfg);
      const ConcentrationReport conc2 = run_concentration(cfg);
      const MultiplicityReport mult2 = run_multiplicity(cfg, &conc2);
      const std::string a = format_report(first), b = format_report(experiment_rows(lv2, conc2, mult2));
      const bool rerun = a == b;

      namespace fs = std::filesystem;
      const fs::path dir = fs::path(cfg.out_dir) / "snapshots";
      int mismatched = 0, certified = 0;
      for (size_t k = 0; k < conc.cells.size(); ++k) {
        const Cell& c = conc.cells[k];
        if (!c.row.converged) continue;
        const std::string path = (dir / ("cell" + std::to_string(k) + ".chqf")).string();
        save_snapshot(c.result.field, path);
        const Field back = load_snapshot(path);
        if (back.grid != c.result.field.grid || back.values.size() != c.result.field.values.size() ||
            std::memcmp(back.values.data(), c.result.field.values.data(), sizeof(double) * back.values.size()) != 0)
          ++mismatched;
        const Certificate cert = certify(back, e, make_potential(cfg.potential, c.eps, e.N));
        if (cert.level == c.row.level && cert.lambda == c.row.lambda && cert.poho_residual == c.row.poho_residual)
          ++certified;
        else
          ++mismatched;
      }
      if (conc.ground.field.values.size()) {
        const std::string path = (dir / "ground.chqf").string();
        save_snapshot(conc.ground.field, path);
        const Field back = load_snapshot(path);
        const Certificate cert = certify(back, e, Potential::constant(0));
        if (back.values != conc.ground.field.values || cert.level != conc.ground.level ||
            cert.lambda != conc.ground.lambda || cert.poho_residual != conc.ground.poho_residual)
          ++mismatched;
        else
          ++certified;
      }
      rep.rows = first;
      out.push_back(row(12, "determinism_io", rerun && mismatched == 0 && certified > 0, mismatched, 0,
                        std::string(rerun ? "rows identical" : "rows differ") + "; " + std::to_string(certified) +
                            " snapshots certified"));
    } catch (const std::exception& ex) {
      out.push_back(row(12, "determinism_io", false, NAN, 0, ex.what()));
    }
  } else {
    out.push_back(row(12, "determinism_io", false, NAN, 0, conc_error));
  }
  if (rep.rows.empty() && lv) rep.rows = experiment_rows(*lv, conc, mult);
  return rep;
}

}  // namespace chq
