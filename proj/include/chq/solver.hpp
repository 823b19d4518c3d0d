#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chq/energy.hpp"
#include "chq/error.hpp"
#include "chq/fiber.hpp"

namespace chq {

struct SolveConfig {
  double step = 1.0;          // initial descent step
  double grad_tol = 1e-9;     // augmented residual of the constrained system, relative to ||u||
  double poho_tol = 1e-6;     // |P(u)| / (2sA)
  int max_iter = 4000;        // descent budget
  bool refine = true;         // natural-constraint Newton after the descent
  bool precondition = true;
  double handoff_tol = 1e-6;  // descent residual at which Newton takes over
  int newton_iter = 30;
  double krylov_tol = 1e-10;
  int krylov_restart = 120;
  int krylov_max = 2000;
  // When set, a solution with ||u||_{H^s} >= R0 raises TruncationActive.
  std::optional<Truncation> trunc;
};

void validate(const SolveConfig& cfg);

struct TraceRow {
  int iter = 0;
  double level = 0;
  double grad = 0;   // projected ray gradient (descent) or augmented residual (Newton)
  double poho = 0;
  double scale = 1;  // composite dilation carried with the iterate
  bool newton = false;
};

struct SolveResult {
  Field field;
  double lambda = 0;         // lagrange_multiplier of the returned field
  double level = 0;
  double poho_residual = 0;  // |P(u)| / (2sA)
  double grad_residual = 0;  // augmented residual (u, lambda, nu) system
  double el_residual = 0;    // ||el_residual(u, lambda)|| / ||u||, carries the finite-box defect
  double nu = 0;             // Pohozaev multiplier, zero in the continuum
  double hs_norm = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<TraceRow> trace;
};

// Reported quantities as a function of the field alone; for a varying
// potential the Pohozaev term is taken about the field's centre of mass.
struct Certificate {
  double lambda = 0, level = 0, poho_residual = 0, el_residual = 0, hs_norm = 0;
};
Certificate certify(const Field& u, const ExponentSet& e, const Potential& pot);
Point mass_centre(const Field& u);

class SolveFailure : public Error {
 public:
  SolveFailure(const std::string& what, SolveResult partial)
      : Error(Errc::NoConvergence, what), partial_(std::move(partial)) {}
  const SolveResult& partial() const { return partial_; }

 private:
  SolveResult partial_;
};

// Gaussian of width L/16 projected to S(a).
Field gaussian_init(const Grid& g, double a, double width = 0);

// One projected gradient step of the (optionally truncated) functional with
// backtracking; eta is updated in place.
Field constrained_step(const Field& u, const ExponentSet& e, const Potential& pot, double& eta,
                       const std::optional<Truncation>& trunc = std::nullopt, bool precondition = false);

SolveResult solve_autonomous(const ExponentSet& e, double mu, double a, const Field& init,
                             const SolveConfig& cfg = {});
// V(eps x) with eps carried by the potential; a constant potential takes the autonomous path.
SolveResult solve_nonautonomous(const ExponentSet& e, const Potential& pot, double a, const Field& init,
                                const SolveConfig& cfg = {});

// (-Delta)^s U + U = (I_alpha * |U|^q)|U|^{q-2}U, positive and even.
SolveResult solve_scalar_ground(const ExponentSet& e, const Grid& g, const SolveConfig& cfg = {});

struct CriticalSweep {
  double S_alpha = 0;          // extrapolated from the two smallest eps
  double S_alpha_closed = 0;
  double spread = 0;           // (max - min) / min of the extrapolated values
  double cutoff = 0;           // chi(|x| / cutoff) applied to the bubble
  std::vector<double> eps, quotient, extrapolated;
};

// A(u) / B_p(u)^{1/p}.
double critical_quotient(const Field& u, const ExponentSet& e);
// B_q(u) / (A(u)^{q gamma_q} ||u||_2^{2q(1-gamma_q)}); bounded by C_{alpha,q} and
// invariant under dilation.
double subcritical_quotient(const Field& u, const ExponentSet& e);
CriticalSweep compute_S_alpha(const ExponentSet& e, const Grid& g, const std::vector<double>& eps_list = {});

// Cutoff of radius R_eps = eps^{-1/2} around the origin of w, moved to y/eps
// by whole cells and renormalized to mass a.
Field make_profile(const Field& w, const Point& y, double eps, double a);
double profile_radius(double eps);
// Smooth radial cutoff: 1 on [0,1], 0 on [2, inf).
double chi(double r);

struct LevelRow {
  double a = 0, mu = 0;
  double level = 0, lambda = 0, poho_residual = 0, el_residual = 0;
  double hartree_q = 0;  // B_q of the solution, for the multiplier closed form
  int iterations = 0;
  bool converged = false;
  std::string error;
};

struct LevelTable {
  std::vector<LevelRow> mass_rows;  // mu = 0 over a_list
  std::vector<LevelRow> mu_rows;    // a = a_list[mass_ref] over mu_list
  bool nonincreasing = false;
  double slope = 0;                 // least-squares d level / d mu
  double slope_rel_error = 0;       // |slope - a/2| / (a/2)
};

LevelTable level_curves(const ExponentSet& e, const std::vector<double>& a_list,
                        const std::vector<double>& mu_list, const Grid& g, const SolveConfig& cfg,
                        int mass_ref = 1, double slack = 1e-6);

}  // namespace chq
