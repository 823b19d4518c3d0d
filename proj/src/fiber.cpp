#include "chq/fiber.hpp"

#include <cmath>

#include "chq/error.hpp"

namespace chq {

FiberProfile make_profile(double A, double Bp, double Bq, double a, double mu, const ExponentSet& e) {
  return FiberProfile{A, Bp, Bq, a, mu, e};
}

FiberProfile extract_profile(const Field& u, const ExponentSet& e, double mu) {
  const double a = mass(u);
  if (!(a > 0)) throw Error(Errc::ZeroField, "fiber of the zero field");
  return make_profile(kinetic_energy(u, e.s), hartree_energy(u, e.p, e.alpha),
                      hartree_energy(u, e.q, e.alpha), a, mu, e);
}

double fiber_value(const FiberProfile& f, double t) {
  const auto& e = f.exps;
  return 0.5 * std::pow(t, 2 * e.s) * f.A + 0.5 * f.mu * f.a -
         std::pow(t, e.delta_p) * f.Bp / (2 * e.p) - std::pow(t, e.delta_q) * f.Bq / (2 * e.q);
}

double psi(const FiberProfile& f, double t) {
  const auto& e = f.exps;
  return 2 * e.s * f.A - e.delta_p / e.p * std::pow(t, e.delta_p - 2 * e.s) * f.Bp -
         e.delta_q / e.q * std::pow(t, e.delta_q - 2 * e.s) * f.Bq;
}

double fiber_derivative(const FiberProfile& f, double t) {
  return 0.5 * std::pow(t, 2 * f.exps.s - 1) * psi(f, t);
}

FiberMax fiber_maximizer(const FiberProfile& f, const std::optional<Truncation>& tr) {
  if (!(f.Bp + f.Bq > 0)) throw Error(Errc::OutOfRange, "fiber needs B_p + B_q > 0");
  // psi(0+) = 2sA > 0 and psi is strictly decreasing
  double lo = 1e-6, hi = 1.0;
  while (psi(f, hi) > 0) {
    lo = hi;
    hi *= 2;
    if (hi > 1e300) throw Error(Errc::NoPositivePart, "no sign change of psi");
  }
  while (psi(f, lo) <= 0) {
    hi = lo;
    lo *= 0.5;
    if (lo < 1e-300) throw Error(Errc::NoPositivePart, "psi is never positive (A = 0?)");
  }
  for (int i = 0; i < 400 && hi / lo - 1 > 1e-14; ++i) {
    const double mid = std::sqrt(lo * hi);
    (psi(f, mid) > 0 ? lo : hi) = mid;
  }
  FiberMax m;
  m.t_star = std::sqrt(lo * hi);
  m.value = fiber_value(f, m.t_star);
  m.psi_bracket = hi / lo - 1;
  if (tr) m.radius_ok = std::sqrt(std::pow(m.t_star, 2 * f.exps.s) * f.A + f.a) <= tr->R0;
  return m;
}

double ray_level(const Field& u, const ExponentSet& e, double mu) {
  return fiber_maximizer(extract_profile(u, e, mu)).value;
}

double truncated_fiber_value(const FiberProfile& f, double t, const Truncation& tr) {
  const auto& e = f.exps;
  const double R = std::sqrt(std::pow(t, 2 * e.s) * f.A + f.a);
  return 0.5 * std::pow(t, 2 * e.s) * f.A + 0.5 * f.mu * f.a -
         tau_eval(tr, R) * std::pow(t, e.delta_p) * f.Bp / (2 * e.p) -
         std::pow(t, e.delta_q) * f.Bq / (2 * e.q);
}

double truncated_fiber_rhs(const FiberProfile& f, double t, const Truncation& tr) {
  return 0.5 * std::pow(t, 2 * f.exps.s - 1) *
         pohozaev_truncated(f.A, f.Bp, f.Bq, f.a, t, f.exps, tr);
}

int psi_sign_changes(const FiberProfile& f, double t_min, double t_max, int points) {
  int changes = 0;
  double prev = 0;
  for (int i = 0; i < points; ++i) {
    const double t = t_min * std::pow(t_max / t_min, double(i) / (points - 1));
    const double v = psi(f, t);
    if (i > 0 && ((prev > 0 && v <= 0) || (prev <= 0 && v > 0))) ++changes;
    prev = v;
  }
  return changes;
}

std::vector<FiberSample> fiber_curve(const FiberProfile& f, double t_min, double t_max, int points) {
  std::vector<FiberSample> out;
  out.reserve(points);
  for (int i = 0; i < points; ++i) {
    const double t = t_min * std::pow(t_max / t_min, double(i) / std::max(1, points - 1));
    out.push_back({t, fiber_value(f, t), psi(f, t)});
  }
  return out;
}

}  // namespace chq
