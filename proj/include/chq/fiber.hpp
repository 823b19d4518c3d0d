#pragma once

#include <vector>

#include "chq/energy.hpp"

namespace chq {

// Coefficients of phi(t) = t^{2s}A/2 + mu a/2 - t^{delta_p}B_p/(2p) - t^{delta_q}B_q/(2q).
struct FiberProfile {
  double A = 0, Bp = 0, Bq = 0, a = 0, mu = 0;
  ExponentSet exps;
};

struct FiberMax {
  double t_star = 1;
  double value = 0;
  double psi_bracket = 0;
  bool radius_ok = true;  // ||u_{t*}||_{H^s} <= R0 when a truncation is supplied
};

FiberProfile extract_profile(const Field& u, const ExponentSet& e, double mu);
FiberProfile make_profile(double A, double Bp, double Bq, double a, double mu, const ExponentSet& e);

double fiber_value(const FiberProfile& f, double t);
double fiber_derivative(const FiberProfile& f, double t);
double psi(const FiberProfile& f, double t);

FiberMax fiber_maximizer(const FiberProfile& f, const std::optional<Truncation>& tr = std::nullopt);

double ray_level(const Field& u, const ExponentSet& e, double mu);

// Truncated fiber J_{mu,T}(u_t) and the right side of d/dt J = t^{2s-1}/2 P_T(u_t).
double truncated_fiber_value(const FiberProfile& f, double t, const Truncation& tr);
double truncated_fiber_rhs(const FiberProfile& f, double t, const Truncation& tr);

int psi_sign_changes(const FiberProfile& f, double t_min, double t_max, int points);

struct FiberSample {
  double t, phi, psi;
};
std::vector<FiberSample> fiber_curve(const FiberProfile& f, double t_min, double t_max, int points);

}  // namespace chq
