#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "chq/random.hpp"
#include "chq/solver.hpp"

using namespace chq;

namespace {

const ExponentSet desk = validate_regime(1, 0.4, 0.5, 3.0);

const Grid& box() {
  static const Grid g = make_grid(1, 4096, 1024.0);
  return g;
}

const SolveResult& desk_solution() {
  static const SolveResult r = solve_autonomous(desk, 0.0, 4.0, gaussian_init(box(), 4.0));
  return r;
}

const SolveResult& ground() {
  static const SolveResult r = solve_scalar_ground(desk, make_grid(1, 4096, 64.0));
  return r;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double first_moment(const Field& u) {
  double m = 0;
  for (Eigen::Index j = 0; j < u.grid.size(); ++j) m += u.grid.coord(int(j)) * u.values[j] * u.values[j];
  return m * u.grid.spacing() / mass(u);
}

// Gaussian well of width 4 at y = 8 on a plateau 0.25, with a smooth skew.
Potential skewed_well(double eps) {
  Potential p;
  p.eps = eps;
  p.V = [](const Point& y) {
    const double d = y[0] - 8;
    return 0.25 * (1 - std::exp(-d * d / 16)) * (1 + 0.5 * std::tanh(d));
  };
  return p;
}

}  // namespace

TEST_CASE("config validation") {
  SolveConfig c;
  c.max_iter = 0;
  CHECK_THROWS_AS(validate(c), Error);
  c = SolveConfig{};
  c.poho_tol = 0;
  CHECK_THROWS_AS(validate(c), Error);
  CHECK_NOTHROW(validate(SolveConfig{}));
}

TEST_CASE("autonomous solve at the desk mass") {
  const SolveResult& r = desk_solution();
  const double a = 4;
  CHECK(r.converged);
  CHECK(r.grad_residual < SolveConfig{}.grad_tol);
  CHECK(r.poho_residual < 1e-6);
  CHECK(rel(mass(r.field), a) < 1e-12);
  CHECK(r.lambda < 0);
  CHECK(r.lambda == lagrange_multiplier(r.field, desk, Potential::constant(0)));

  // lambda a = mu a - ((N + alpha) - (N - 2s) q) / (2 s q) B_q once P(u) = 0
  const double Bq = hartree_energy(r.field, desk.q, desk.alpha);
  const double closed = -((desk.N + desk.alpha) - (desk.N - 2 * desk.s) * desk.q) / (2 * desk.s * desk.q) * Bq / a;
  CHECK(rel(r.lambda, closed) < 1e-6);

  // the ray level only decreases during the descent
  const TraceRow* prev = nullptr;
  for (const TraceRow& row : r.trace) {
    if (row.newton) break;
    if (prev) CHECK(row.level <= prev->level * (1 + 1e-12));
    prev = &row;
  }

  // positive up to sign, and mirror symmetric about the box centre
  const Eigen::VectorXd& v = r.field.values;
  const double sgn = v.sum() > 0 ? 1 : -1;
  const double peak = v.cwiseAbs().maxCoeff();
  const int n = box().points;
  double asym = 0;
  for (int j = 0; j < n; ++j) asym = std::max(asym, std::abs(v[j] - v[n - 1 - j]));
  CHECK(asym < 1e-8 * peak);
  CHECK((sgn * v).minCoeff() > 0);
}

TEST_CASE("finite box defect shrinks with the box") {
  // same spacing, twice the extent
  const double a = 3;
  const Grid small = make_grid(1, 2048, 512.0), large = make_grid(1, 4096, 1024.0);
  const SolveResult rs = solve_autonomous(desk, 0.0, a, gaussian_init(small, a));
  const SolveResult rl = solve_autonomous(desk, 0.0, a, gaussian_init(large, a));
  INFO(rs.el_residual, " ", rl.el_residual);
  CHECK(rl.el_residual < rs.el_residual);
  CHECK(std::abs(rl.nu) < std::abs(rs.nu));
}

TEST_CASE("level laws") {
  const LevelTable t = level_curves(desk, {2, 4, 6, 8}, {0, 0.5, 1}, box(), SolveConfig{});
  REQUIRE(t.mass_rows.size() == 4);
  for (const LevelRow& row : t.mass_rows) {
    INFO(row.a, " ", row.error);
    CHECK(row.converged);
  }
  CHECK(t.nonincreasing);
  CHECK(t.slope_rel_error < 1e-3);
  REQUIRE(t.mu_rows.size() == 3);
  const LevelRow& base = t.mu_rows[0];
  for (const LevelRow& row : t.mu_rows) {
    REQUIRE(row.converged);
    CHECK(row.lambda < row.mu);
    if (row.mu > 0) CHECK(rel(row.level - base.level, row.mu * row.a / 2) < 1e-4);
  }
  // the reference cell is the plain desk solve
  CHECK(rel(t.mass_rows[1].level, desk_solution().level) < 1e-8);
}

TEST_CASE("constant potentials") {
  const double a = 4, mu = 0.5;
  const Field init = gaussian_init(box(), a);
  const SolveResult ra = solve_autonomous(desk, mu, a, init);
  const SolveResult rn = solve_nonautonomous(desk, Potential::constant(mu), a, init);
  CHECK(ra.level == rn.level);
  CHECK(ra.field.values == rn.field.values);

  // the same constant supplied as a function goes through the general path
  Potential flat;
  flat.V = [mu](const Point&) { return mu; };
  const SolveResult rf = solve_nonautonomous(desk, flat, a, init);
  CHECK(rel(rf.level, ra.level) < 1e-8);
  CHECK((rf.field.values - ra.field.values).norm() < 1e-6 * ra.field.values.norm());
}

TEST_CASE("constrained step") {
  const double a = 4;
  const Field u = gaussian_init(box(), a);
  double eta = 1;
  for (const Potential& pot : {Potential::constant(0), Potential::constant(0.5), skewed_well(0.2)}) {
    Field v = u;
    for (int k = 0; k < 5; ++k) {
      const double before = energy(v, desk, pot).total;
      v = constrained_step(v, desk, pot, eta, std::nullopt, true);
      CHECK(energy(v, desk, pot).total <= before);
      CHECK(rel(mass(v), a) < 1e-12);
    }
  }

  // at the solution the step moves the field only by the finite box defect
  const SolveResult& r = desk_solution();
  eta = 1;
  const Field w = constrained_step(r.field, desk, Potential::constant(0), eta);
  CHECK((w.values - r.field.values).norm() <= 10 * r.el_residual * r.field.values.norm());
}

TEST_CASE("solver failures") {
  SolveConfig c;
  c.max_iter = 3;
  c.refine = false;
  const Field init = gaussian_init(box(), 4.0);
  try {
    solve_autonomous(desk, 0.0, 4.0, init, c);
    FAIL("expected NoConvergence");
  } catch (const SolveFailure& f) {
    CHECK(f.code() == Errc::NoConvergence);
    CHECK(!f.partial().converged);
    CHECK(!f.partial().trace.empty());
  }
  c = SolveConfig{};
  c.trunc = make_truncation(1e-3, 2e-3);
  try {
    solve_autonomous(desk, 0.0, 4.0, init, c);
    FAIL("expected TruncationActive");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TruncationActive);
  }
}

TEST_CASE("scalar ground state") {
  const SolveResult& U = ground();
  const Eigen::VectorXd& v = U.field.values;
  CHECK(U.converged);
  CHECK(v.minCoeff() > 0);
  CHECK(U.grad_residual < 1e-6);
  const int n = U.field.grid.points;
  double asym = 0;
  for (int j = 0; j < n; ++j) asym = std::max(asym, std::abs(v[j] - v[n - 1 - j]));
  INFO(asym);
  CHECK(asym < 1e-7 * v.maxCoeff());
  CHECK(U.poho_residual < 1e-4);

  // a finer grid on the same box gives the same norm
  const SolveResult fine = solve_scalar_ground(desk, make_grid(1, 8192, 64.0));
  CHECK(rel(std::sqrt(mass(fine.field)), std::sqrt(mass(U.field))) < 1e-5);
}

TEST_CASE("interpolation inequalities") {
  const SolveResult& U = ground();
  const double C = sharp_constant(desk, desk.q, std::sqrt(mass(U.field)));
  const CriticalSweep S = compute_S_alpha(desk, box());

  // tightness at U, flat along its dilations (compressions keep the tails in the box)
  for (double t : {1.0, 1.25, 1.5}) {
    const Field d = t == 1 ? U.field : dilate(U.field, t, DilateOptions{1e-8});
    CHECK(subcritical_quotient(d, desk) >= 0.99 * C);
  }

  std::mt19937_64 rng(7);
  const Grid g = make_grid(1, 1024, 48.0);
  double worst_sub = 0, worst_crit = INFINITY;
  for (int k = 0; k < 200; ++k) {
    const Field u = random_field(g, rng);
    worst_sub = std::max(worst_sub, subcritical_quotient(u, desk) / C);
    worst_crit = std::min(worst_crit, critical_quotient(u, desk) / S.S_alpha);
  }
  INFO(worst_sub, " ", worst_crit);
  CHECK(worst_sub <= 1 + 1e-3);
  CHECK(worst_crit >= 1 - 1e-3);
}

TEST_CASE("critical constant sweep") {
  const CriticalSweep S = compute_S_alpha(desk, box());
  REQUIRE(S.eps.size() >= 3);
  CHECK(S.spread < 0.02);
  CHECK(rel(S.S_alpha, S.S_alpha_closed) < 0.01);
  // quotients of the cut bubbles decrease towards the limit
  for (size_t i = 1; i < S.quotient.size(); ++i) CHECK(S.quotient[i - 1] < S.quotient[i]);
  CHECK(S.quotient.front() > S.S_alpha_closed);

  std::mt19937_64 rng(3);
  const Field u = random_field(box(), rng);
  Field v = u;
  v.values *= 3.7;
  v.cached_mass.reset();
  CHECK(critical_quotient(v, desk) == doctest::Approx(critical_quotient(u, desk)).epsilon(1e-12));

  CHECK_THROWS_AS(compute_S_alpha(desk, box(), {0.5}), Error);
}

TEST_CASE("profiles") {
  const Field& w = desk_solution().field;
  const double a = 2, h = box().spacing();
  for (double eps : {0.4, 0.2, 0.1}) {
    const Point y{8, 0, 0};
    const Field phi = make_profile(w, y, eps, a);
    CHECK(rel(mass(phi), a) < 1e-12);
    CHECK(std::abs(eps * first_moment(phi) - y[0]) <= 2 * eps * profile_radius(eps));
    CHECK(std::abs(eps * first_moment(phi) - y[0]) <= eps * h / 2 + 1e-9);
  }
  CHECK(chi(0.5) == 1);
  CHECK(chi(2.5) == 0);
  CHECK_THROWS_AS(make_profile(w, Point{60, 0, 0}, 0.1, a), Error);
  CHECK_THROWS_AS(make_profile(w, Point{0, 0, 0}, 0.0, a), Error);
}

TEST_CASE("non-autonomous solve in a skewed well") {
  const double a = 2;
  const SolveResult w = solve_autonomous(desk, 0.0, a, gaussian_init(box(), a));
  const Potential pot = skewed_well(0.2);
  const Field init = make_profile(w.field, Point{8, 0, 0}, 0.2, a);
  const SolveResult r = solve_nonautonomous(desk, pot, a, init);
  CHECK(r.converged);
  CHECK(r.poho_residual < 1e-6);
  CHECK(r.lambda < 0);
  CHECK(rel(mass(r.field), a) < 1e-12);
  // sandwich between the autonomous level and its shift by max V a / 2
  CHECK(r.level >= w.level);
  CHECK(r.level <= w.level + 0.25 * 1.5 * a / 2);
  // pushed off the well towards the lower wall, but not far
  const double y = 0.2 * first_moment(r.field);
  CHECK(y < 8);
  CHECK(y > 7);
}

TEST_CASE("mass threshold diagnostic") {
  // K_q < 0 at the desk exponents: no threshold, X* still defined
  const double C = sharp_constant(desk, desk.q, std::sqrt(mass(ground().field)));
  CHECK_THROWS_AS(mass_threshold(desk, critical_constant_closed(desk), C), Error);
  const double K = desk.kq_prefactor * C;
  const double X = xstar_root(desk, critical_constant_closed(desk), K, 4.0);
  CHECK(X > 0);
  CHECK(std::isfinite(X));
}
