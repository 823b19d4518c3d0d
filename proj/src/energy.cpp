#include "chq/energy.hpp"

#include <cmath>

#include "chq/error.hpp"

namespace chq {

Truncation make_truncation(double R0, double R1) {
  if (!(R0 > 0 && R1 > R0))
    throw Error(Errc::ConfigError, "truncation radii must satisfy 0 < R0 < R1");
  return {R0, R1};
}

namespace {

inline double bump(double x) { return x > 0 ? std::exp(-1 / x) : 0.0; }
inline double bump_prime(double x) { return x > 0 ? std::exp(-1 / x) / (x * x) : 0.0; }

}  // namespace

double tau_eval(const Truncation& tr, double r) {
  if (r <= tr.R0) return 1;
  if (r >= tr.R1) return 0;
  const double a = bump(tr.R1 - r), b = bump(r - tr.R0);
  return a / (a + b);
}

double tau_derivative(const Truncation& tr, double r) {
  if (r <= tr.R0 || r >= tr.R1) return 0;
  const double a = bump(tr.R1 - r), b = bump(r - tr.R0);
  const double da = -bump_prime(tr.R1 - r), db = bump_prime(r - tr.R0);
  return (da * b - a * db) / ((a + b) * (a + b));
}

double hs_norm(const Field& u, double s) { return std::sqrt(kinetic_energy(u, s) + mass(u)); }

Eigen::VectorXd Potential::sample(const Grid& g, double t) const {
  if (is_constant()) return Eigen::VectorXd::Constant(g.size(), mu);
  return chq::sample(g, [&](const Point& x) {
           Point y{};
           for (int d = 0; d < g.N; ++d) y[d] = eps * (center[d] + (x[d] - center[d]) / t);
           return V(y);
         }).values;
}

Eigen::VectorXd Potential::virial(const Grid& g, double t) const {
  if (is_constant()) return Eigen::VectorXd::Zero(g.size());
  return chq::sample(g, [&](const Point& x) {
           Point y{};
           for (int d = 0; d < g.N; ++d) y[d] = eps * (center[d] + (x[d] - center[d]) / t);
           Point gr{};
           if (gradV) {
             gr = gradV(y);
           } else {
             for (int d = 0; d < g.N; ++d) {
               const double hstep = 1e-5 * (1 + std::abs(y[d]));
               Point yp = y, ym = y;
               yp[d] += hstep;
               ym[d] -= hstep;
               gr[d] = (V(yp) - V(ym)) / (2 * hstep);
             }
           }
           double acc = 0;
           for (int d = 0; d < g.N; ++d) acc += (y[d] - eps * center[d]) * gr[d];
           return acc;
         }).values;
}

Eigen::VectorXd power_density(const Eigen::VectorXd& u, double r) {
  Eigen::VectorXd out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double a = std::abs(u[i]);
    out[i] = a < 1e-300 ? 0.0 : std::exp(r * std::log(a));
  }
  return out;
}

double hartree_energy(const Field& u, double r, double alpha) {
  if (!(r >= 1)) throw Error(Errc::OutOfRange, "Hartree exponent must be >= 1");
  const Eigen::VectorXd rho = power_density(u.values, r);
  return u.grid.cell_volume() * rho.dot(apply_symbol(u.grid, -alpha, rho));
}

double assemble_total(const EnergyBreakdown& b, const ExponentSet& e) {
  return b.kinetic / 2 + b.potential / 2 - b.tau_factor * b.hartree_p / (2 * e.p) -
         b.hartree_q / (2 * e.q);
}

EnergyBreakdown energy(const Field& u, const ExponentSet& e, const Potential& pot,
                       const std::optional<Truncation>& trunc) {
  require_finite(u.values, "field");
  EnergyBreakdown b;
  const double dv = u.grid.cell_volume();
  b.kinetic = kinetic_energy(u, e.s);
  if (pot.is_constant()) b.potential = pot.mu * mass(u);
  else b.potential = dv * pot.sample(u.grid).dot(u.values.cwiseAbs2());
  b.hartree_p = hartree_energy(u, e.p, e.alpha);
  b.hartree_q = hartree_energy(u, e.q, e.alpha);
  b.tau_factor = trunc ? tau_eval(*trunc, std::sqrt(b.kinetic + mass(u))) : 1.0;
  b.total = assemble_total(b, e);
  return b;
}

Evaluation evaluate(const Field& u, const ExponentSet& e, const Potential& pot) {
  Evaluation ev;
  const Grid& g = u.grid;
  const double dv = g.cell_volume();
  const Eigen::VectorXd absu = u.values.cwiseAbs();
  ev.mass = dv * u.values.squaredNorm();
  ev.Ku = apply_symbol(g, 2 * e.s, u.values);
  ev.A = dv * u.values.dot(ev.Ku);
  const Eigen::VectorXd rp = power_density(u.values, e.p);
  const Eigen::VectorXd rq = power_density(u.values, e.q);
  ev.Ip = apply_symbol(g, -e.alpha, rp);
  ev.Iq = apply_symbol(g, -e.alpha, rq);
  ev.Bp = dv * rp.dot(ev.Ip);
  ev.Bq = dv * rq.dot(ev.Iq);
  // |u|^{r-2} u = |u|^r / u where u != 0
  ev.Hp.resize(u.values.size());
  ev.Hq.resize(u.values.size());
  for (Eigen::Index i = 0; i < u.values.size(); ++i) {
    const double x = u.values[i];
    if (absu[i] < 1e-300) {
      ev.Hp[i] = ev.Hq[i] = 0;
    } else {
      ev.Hp[i] = ev.Ip[i] * rp[i] / x;
      ev.Hq[i] = ev.Iq[i] * rq[i] / x;
    }
  }
  if (pot.is_constant()) {
    ev.pot = pot.mu * ev.mass;
  } else {
    ev.Vs = pot.sample(g);
    ev.pot = dv * ev.Vs.dot(u.values.cwiseAbs2());
  }
  return ev;
}

Field el_residual(const Field& u, double lambda, const ExponentSet& e, const Potential& pot) {
  const Evaluation ev = evaluate(u, e, pot);
  Eigen::VectorXd G = ev.Ku - ev.Hp - ev.Hq - lambda * u.values;
  if (pot.is_constant()) G += pot.mu * u.values;
  else G += ev.Vs.cwiseProduct(u.values);
  return Field{u.grid, std::move(G), std::nullopt};
}

double lagrange_multiplier(const Field& u, const ExponentSet& e, const Potential& pot) {
  const Evaluation ev = evaluate(u, e, pot);
  if (!(ev.mass > 0)) throw Error(Errc::ZeroField, "multiplier of the zero field");
  return (ev.A + ev.pot - ev.Bp - ev.Bq) / ev.mass;
}

double pohozaev(const Field& u, const ExponentSet& e) {
  const double A = kinetic_energy(u, e.s);
  const double Bp = hartree_energy(u, e.p, e.alpha);
  const double Bq = hartree_energy(u, e.q, e.alpha);
  return 2 * e.s * A - e.delta_p / e.p * Bp - e.delta_q / e.q * Bq;
}

double pohozaev(const Field& u, const ExponentSet& e, const Potential& pot) {
  double P = pohozaev(u, e);
  if (!pot.is_constant())
    P -= u.grid.cell_volume() * pot.virial(u.grid).dot(u.values.cwiseAbs2());
  return P;
}

double pohozaev_truncated(double A, double Bp, double Bq, double a, double t, const ExponentSet& e,
                          const Truncation& tr) {
  const double R = std::sqrt(std::pow(t, 2 * e.s) * A + a);
  const double tp = std::pow(t, e.delta_p);
  return 2 * e.s * A - e.delta_p / e.p * tau_eval(tr, R) * tp / std::pow(t, 2 * e.s) * Bp -
         e.delta_q / e.q * std::pow(t, e.delta_q - 2 * e.s) * Bq -
         e.s * tau_derivative(tr, R) / R * A * (tp / e.p * Bp);
}

double pohozaev_truncated(const Field& u, double t, const ExponentSet& e, const Truncation& tr) {
  if (!(t > 0)) throw Error(Errc::OutOfRange, "t must be positive");
  return pohozaev_truncated(kinetic_energy(u, e.s), hartree_energy(u, e.p, e.alpha),
                            hartree_energy(u, e.q, e.alpha), mass(u), t, e, tr);
}

}  // namespace chq
