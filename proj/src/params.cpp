#include "chq/params.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "chq/error.hpp"

namespace chq {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

ExponentSet validate_regime(int N, double s, double alpha, double q) {
  if (!(std::isfinite(s) && std::isfinite(alpha) && std::isfinite(q)))
    throw Error(Errc::RegimeViolation, "parameters must be finite");
  if (N < 1) throw Error(Errc::RegimeViolation, "N must be a positive integer");
  if (!(s > 0 && s < 1)) throw Error(Errc::RegimeViolation, "s must lie in (0,1)");
  if (!(N > 2 * s)) throw Error(Errc::RegimeViolation, "N must exceed 2s");
  const double lo = std::max(0.0, N - 4 * s);
  if (!(alpha > lo))
    throw Error(Errc::RegimeViolation, "alpha must exceed max(0,N-4s)=" + fmt(lo));
  if (!(alpha < N)) throw Error(Errc::RegimeViolation, "alpha must be below N");

  ExponentSet e;
  e.N = N;
  e.s = s;
  e.alpha = alpha;
  e.q = q;
  e.p = (N + alpha) / (N - 2 * s);
  e.p_bar = (N + 2 * s + alpha) / N;
  e.p_lower = (N + alpha) / N;
  if (!(q > e.p_bar)) throw Error(Errc::RegimeViolation, "q must exceed p_bar=" + fmt(e.p_bar));
  if (!(q < e.p)) throw Error(Errc::RegimeViolation, "q must be below p=" + fmt(e.p));

  e.delta_q = e.delta(q);
  e.delta_p = e.delta(e.p);
  e.gamma_q = e.delta_q / (2 * s * q);
  e.sigma = (N + alpha) / (2 * (alpha + 2 * s));
  e.theta_q = 2 * e.sigma * (e.p - q * e.gamma_q) - e.p;
  e.kq_prefactor = (2 - 2 * q * e.gamma_q) * e.p / (q * (2 * e.p - 2));
  return e;
}

double gamma_ts(const ExponentSet& e, double t) {
  if (!(t > e.p_lower && t <= e.p))
    throw Error(Errc::OutOfRange, "t must lie in (p_lower, p], got " + fmt(t));
  if (t == e.p) return 1.0;
  return e.delta(t) / (2 * e.s * t);
}

double sharp_constant(const ExponentSet& e, double t, double norm2_of_U) {
  if (!(t > e.p_lower && t < e.p))
    throw Error(Errc::OutOfRange, "t must lie in (p_lower, p), got " + fmt(t));
  if (!(norm2_of_U > 0)) throw Error(Errc::OutOfRange, "||U||_2 must be positive");
  const double N = e.N, s = e.s, a = e.alpha;
  const double d = 2 * s * t - N * t + N + a;  // = 2st(1-gamma) > 0
  const double nt = N * t - N - a;
  return (2 * s * t / d) * std::pow(d / nt, nt / (2 * s)) * std::pow(norm2_of_U, 2 - 2 * t);
}

MassThreshold mass_threshold(const ExponentSet& e, double S_alpha, double C_alpha_q) {
  if (!(S_alpha > 0)) throw Error(Errc::OutOfRange, "S_alpha must be positive");
  MassThreshold m;
  m.K_q = e.kq_prefactor * C_alpha_q;
  m.theta_q = e.theta_q;
  m.exponent = 1.0 / (e.q * (1 - e.gamma_q));
  m.near_degenerate = (1 - e.gamma_q) < 1e-3;
  if (!(m.K_q > 0))
    throw Error(Errc::NonPositiveConstant,
                "K_q=" + fmt(m.K_q) + " (2-2q*gamma_q=" + fmt(2 - 2 * e.q * e.gamma_q) + ")");
  m.a_max = std::pow(std::pow(S_alpha, e.theta_q) / m.K_q, m.exponent);
  return m;
}

double riesz_normalization(int N, double alpha) {
  if (!(alpha > 0 && alpha < N)) throw Error(Errc::OutOfRange, "alpha must lie in (0,N)");
  return std::tgamma((N - alpha) / 2) /
         (std::pow(M_PI, N / 2.0) * std::pow(2.0, alpha) * std::tgamma(alpha / 2));
}

double hls_constant(int N, double alpha) {
  if (!(alpha > 0 && alpha < N)) throw Error(Errc::OutOfRange, "alpha must lie in (0,N)");
  return std::pow(M_PI, (N - alpha) / 2) * std::tgamma(alpha / 2) / std::tgamma((N + alpha) / 2) *
         std::pow(std::tgamma(N / 2.0) / std::tgamma(double(N)), -alpha / N);
}

double fractional_sobolev_constant(int N, double s) {
  return std::pow(2.0, 2 * s) * std::pow(M_PI, s) * std::tgamma((N + 2 * s) / 2) /
         std::tgamma((N - 2 * s) / 2) *
         std::pow(std::tgamma(N / 2.0) / std::tgamma(double(N)), 2 * s / N);
}

// The fractional Sobolev and HLS extremals coincide, so the Choquard quotient
// of the bubble factors through both sharp constants.
double critical_constant_closed(const ExponentSet& e) {
  const double AC = riesz_normalization(e.N, e.alpha) * hls_constant(e.N, e.alpha);
  return fractional_sobolev_constant(e.N, e.s) * std::pow(AC, -1.0 / e.p);
}

double bubble_level(const ExponentSet& e, double S_alpha) {
  return (e.p - 1) / (2 * e.p) * std::pow(S_alpha, e.p / (e.p - 1));
}

double xstar_root(const ExponentSet& e, double S_alpha, double K_q, double a) {
  const double c = K_q * std::pow(S_alpha, -e.theta_q) * std::pow(a, e.q * (1 - e.gamma_q));
  const double k = e.q * e.gamma_q - 1;
  auto h = [&](double X) { return S_alpha * std::pow(X, e.p - 1) + c * std::pow(X, k) - 1; };
  // h(0) = -1; h is either increasing or first decreasing then increasing.
  double lo = 0, hi = 1;
  while (h(hi) < 0) {
    lo = hi;
    hi *= 2;
    if (hi > 1e300) throw Error(Errc::OutOfRange, "no positive root of h");
  }
  for (int i = 0; i < 2000 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace chq
