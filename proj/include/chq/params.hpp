#pragma once

// Parameter regime and the derived exponents/constants.

namespace chq {

struct ExponentSet {
  int N = 1;
  double s = 0.4;
  double alpha = 0.5;
  double q = 3.0;
  double p = 0;        // upper HLS critical exponent (N+alpha)/(N-2s)
  double p_bar = 0;    // L2-critical exponent (N+2s+alpha)/N
  double p_lower = 0;  // (N+alpha)/N
  double delta_q = 0;
  double delta_p = 0;
  double gamma_q = 0;
  double sigma = 0;
  double theta_q = 0;
  // K_q = kq_prefactor * C_{alpha,q}; the sharp constant needs a solve.
  double kq_prefactor = 0;

  double delta(double r) const { return N * r - N - alpha; }
};

ExponentSet validate_regime(int N, double s, double alpha, double q);

double gamma_ts(const ExponentSet& e, double t);

// C_{alpha,t} from the closed form in terms of ||U||_2.
double sharp_constant(const ExponentSet& e, double t, double norm2_of_U);

struct MassThreshold {
  double a_max = 0;
  double K_q = 0;
  double theta_q = 0;
  double exponent = 0;  // 1/(q(1-gamma_q))
  bool near_degenerate = false;
};

// Throws NonPositiveConstant when K_q <= 0.
MassThreshold mass_threshold(const ExponentSet& e, double S_alpha, double C_alpha_q);

double riesz_normalization(int N, double alpha);
double hls_constant(int N, double alpha);
// Sharp constant of |||D|^s u||^2 >= S ||u||_{2N/(N-2s)}^2.
double fractional_sobolev_constant(int N, double s);
// S_alpha from the extremal family: S_s (A_{N,alpha} C(N,alpha))^{-1/p}.
double critical_constant_closed(const ExponentSet& e);
// Energy of the critical bubble, (p-1)/(2p) S_alpha^{p/(p-1)}.
double bubble_level(const ExponentSet& e, double S_alpha);

// Unique positive root of S X^{p-1} + K S^{-theta} a^{q(1-gamma)} X^{q gamma-1} - 1.
double xstar_root(const ExponentSet& e, double S_alpha, double K_q, double a);

struct ConstantSet {
  double A_N_alpha = 0;
  double C_HLS = 0;
  double S_alpha = 0;         // as supplied (sweep or closed form)
  double S_alpha_closed = 0;
  double C_alpha_q = 0;
  double K_q = 0;
  double theta_q = 0;
  double a_max = 0;           // NaN when K_q <= 0
};

}  // namespace chq
