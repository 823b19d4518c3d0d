#pragma once

#include <array>
#include <functional>
#include <optional>

#include "chq/params.hpp"
#include "chq/spectral.hpp"

namespace chq {

using Point = std::array<double, 3>;

// Smooth cutoff in the H^s norm.
struct Truncation {
  double R0 = 1;
  double R1 = 2;
};

Truncation make_truncation(double R0, double R1);
double tau_eval(const Truncation& tr, double r);
double tau_derivative(const Truncation& tr, double r);

// ||u||_{H^s}^2 = A(u) + ||u||_2^2.
double hs_norm(const Field& u, double s);

// V(eps x) for a slow-variable profile V(y), or a constant mu when V is empty.
struct Potential {
  double mu = 0;
  std::function<double(const Point&)> V;
  std::function<Point(const Point&)> gradV;  // optional; central differences otherwise
  double eps = 1;
  Point center{};  // fixed point c of the dilations, in x

  static Potential constant(double mu) { return Potential{mu, {}, {}, 1, {}}; }
  bool is_constant() const { return !V; }
  // Samples V(y) with y = eps (c + (x - c) / t); t = 1 is the plain potential.
  Eigen::VectorXd sample(const Grid& g, double t = 1) const;
  // Samples (y - eps c) . grad V(y), so that d/dt int V(y)|u|^2 = -(1/t) int virial |u|^2.
  Eigen::VectorXd virial(const Grid& g, double t = 1) const;
};

struct EnergyBreakdown {
  double kinetic = 0;
  double potential = 0;
  double hartree_p = 0;
  double hartree_q = 0;
  double tau_factor = 1;
  double total = 0;
};

// |u|^r, with |u| < 1e-300 clamped to 0.
Eigen::VectorXd power_density(const Eigen::VectorXd& u, double r);

double hartree_energy(const Field& u, double r, double alpha);

EnergyBreakdown energy(const Field& u, const ExponentSet& e, const Potential& pot,
                       const std::optional<Truncation>& trunc = std::nullopt);
double assemble_total(const EnergyBreakdown& b, const ExponentSet& e);

// Everything the solver needs from one field, sharing the transforms.
struct Evaluation {
  double A = 0, Bp = 0, Bq = 0, mass = 0, pot = 0;
  Eigen::VectorXd Ku;        // (-Delta)^s u
  Eigen::VectorXd Hp, Hq;    // (I_alpha * |u|^r)|u|^{r-2} u
  Eigen::VectorXd Ip, Iq;    // I_alpha * |u|^r
  Eigen::VectorXd Vs;        // sampled V(eps x), empty for constant potentials
};

Evaluation evaluate(const Field& u, const ExponentSet& e, const Potential& pot);

// (-Delta)^s u + V u - lambda u - H_p - H_q.
Field el_residual(const Field& u, double lambda, const ExponentSet& e, const Potential& pot);
double lagrange_multiplier(const Field& u, const ExponentSet& e, const Potential& pot);

// 2sA - (delta_p/p) B_p - (delta_q/q) B_q.
double pohozaev(const Field& u, const ExponentSet& e);
// Adds the virial term -int eps x.grad V(eps x)|u|^2 for a varying potential.
double pohozaev(const Field& u, const ExponentSet& e, const Potential& pot);
// P_T(u_t) in terms of A, B of u and the ray parameter t.
double pohozaev_truncated(const Field& u, double t, const ExponentSet& e, const Truncation& tr);
double pohozaev_truncated(double A, double Bp, double Bq, double a, double t, const ExponentSet& e,
                          const Truncation& tr);

}  // namespace chq
