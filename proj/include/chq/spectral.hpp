#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace chq {

// isolated: samples of a band-limited function on R^N that vanishes outside
// the box; operators act as exact whole-space multipliers on the sinc
// interpolant (Toeplitz kernels). periodic: samples on the torus, multipliers
// on the DFT modes with the zero mode removed.
enum class Topology { isolated, periodic };

const char* topology_name(Topology t);
Topology parse_topology(const std::string& s);

struct Grid {
  int N = 1;
  int points = 1024;
  double extent = 64.0;
  Topology topology = Topology::isolated;

  double spacing() const { return extent / points; }
  double cell_volume() const;
  Eigen::Index size() const;
  // Cell-centred axis coordinate, (j - (points-1)/2) * spacing, so that the
  // reflection j -> points-1-j is exact.
  double coord(int j) const { return (j - 0.5 * (points - 1)) * spacing(); }
  bool operator==(const Grid& o) const {
    return N == o.N && points == o.points && extent == o.extent && topology == o.topology;
  }
  bool operator!=(const Grid& o) const { return !(*this == o); }
};

Grid make_grid(int N, int points, double extent, Topology topology = Topology::isolated);

struct Field {
  Grid grid;
  Eigen::VectorXd values;
  std::optional<double> cached_mass;
};

Field make_field(const Grid& g, Eigen::VectorXd values);
Field zeros(const Grid& g);
// Samples f at the grid points; f receives a point with N valid coordinates.
template <typename F>
Field sample(const Grid& g, F&& f) {
  Field u{g, Eigen::VectorXd(g.size()), std::nullopt};
  const int n = g.points;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    std::array<double, 3> x{0, 0, 0};
    Eigen::Index r = i;
    for (int d = g.N - 1; d >= 0; --d) {
      x[d] = g.coord(int(r % n));
      r /= n;
    }
    u.values[i] = f(x);
  }
  return u;
}

void require_same_grid(const Grid& a, const Grid& b);
void require_finite(const Eigen::VectorXd& v, const char* what);

// Quadrature pairing h^N sum u v.
double dot(const Field& u, const Field& v);
double mass(const Field& u);
Field project_mass(const Field& u, double a);

// Multiplier |k|^gamma on raw samples; gamma = 2s gives (-Delta)^s and
// gamma = -alpha gives I_alpha.
Eigen::VectorXd apply_symbol(const Grid& g, double gamma, const Eigen::VectorXd& u);

// (shift + scale |k|^gamma)^{-1} on the periodic DFT of the samples, for either
// topology; only used as a preconditioner.
Eigen::VectorXd apply_resolvent(const Grid& g, double gamma, double scale, double shift,
                                const Eigen::VectorXd& u);

Field fractional_laplacian(const Field& u, double s);
double kinetic_energy(const Field& u, double s);
Field riesz_potential(const Field& rho, double alpha);

struct DilateOptions {
  // Relative tolerance for spectral content pushed past Nyquist (t > 1) or
  // mass pulled in from outside the box (t < 1).
  double alias_tol = 1e-10;
  bool check = true;
  std::array<double, 3> center{};  // fixed point of the dilation
};

// Spectral interpolation of t^{N/2} u(c + t (x - c)) onto the same grid.
Field dilate(const Field& u, double t, const DilateOptions& opt = {});

// Alias measure used by dilate: fraction of |u_hat|^2 beyond the remapped
// Nyquist band (t > 1) or fraction of mass outside t*L/2 (t < 1).
double alias_fraction(const Field& u, double t, const std::array<double, 3>& center = {});

// Cyclic shift by whole cells along each axis.
Field translate_cells(const Field& u, const std::array<int, 3>& shift);

// First derivative along axis d, spectral.
Eigen::VectorXd spectral_derivative(const Grid& g, int axis, const Eigen::VectorXd& u);

// Lattice coefficients c(m) = (1/pi) int_0^pi k^gamma cos(m k) dk, m = 0..count-1.
Eigen::VectorXd lattice_coefficients(double gamma, int count);

// Gauss-Laguerre rule (weight e^{-y}) with n nodes.
void gauss_laguerre(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

}  // namespace chq
