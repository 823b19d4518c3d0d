#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "chq/error.hpp"
#include "chq/params.hpp"
#include "chq/random.hpp"
#include "chq/spectral.hpp"

using namespace chq;

namespace {

double max_abs(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

Field gaussian(const Grid& g, double w = 1.0) {
  return sample(g, [w](const std::array<double, 3>& x) {
    double r2 = 0;
    for (double c : x) r2 += c * c;
    return std::exp(-r2 / (2 * w * w));
  });
}

}  // namespace

TEST_CASE("lattice coefficients against high-precision quadrature") {
  // (1/pi) int_0^pi k^g cos(mk) dk at m = 0, 1, 2, 7, 100, 1000 (mpmath, 25 digits)
  const int ms[] = {0, 1, 2, 7, 100, 1000};
  const double kin[] = {1.3881851461368683451, -0.48107222645958383906, -0.030605673546794417043,
                        -0.012623414198881955272, -0.000050570841536777886979,
                        -9.1995713484517447514e-7};
  const double rsz[] = {1.1283791670955125739, 0.42199443807766072375, 0.27546748583941780978,
                        0.15136493306769212044, 0.039891369930904696265, 0.012615634027933358566};
  const Eigen::VectorXd a = lattice_coefficients(0.8, 1001);
  const Eigen::VectorXd b = lattice_coefficients(-0.5, 1001);
  const Eigen::VectorXd c = lattice_coefficients(2.0, 1001);
  for (int i = 0; i < 6; ++i) {
    CHECK(std::abs(a[ms[i]] - kin[i]) < 1e-14 + 1e-8 * std::abs(kin[i]));
    CHECK(std::abs(b[ms[i]] - rsz[i]) < 1e-14 * (1 + std::abs(rsz[i])));
  }
  // gamma = 2: 2(-1)^m/m^2
  for (int m = 1; m < 1001; m += 37) CHECK(std::abs(c[m] - 2.0 * ((m % 2) ? -1 : 1) / (double(m) * m)) < 1e-12);
}

TEST_CASE("Gauss-Laguerre rule integrates polynomials") {
  Eigen::VectorXd y, w;
  gauss_laguerre(20, y, w);
  double fact = 1;
  for (int k = 0; k < 30; ++k) {
    if (k > 0) fact *= k;
    CHECK((w.array() * y.array().pow(k)).sum() == doctest::Approx(fact).epsilon(1e-11));
  }
}

TEST_CASE("periodic multipliers act on single modes") {
  const Grid g = make_grid(1, 64, 2 * M_PI, Topology::periodic);
  const double s = 0.4;
  for (int k : {1, 3, 17, 31}) {
    const Field u = sample(g, [k](const std::array<double, 3>& x) { return 1.7 * std::cos(k * x[0]); });
    const Field L = fractional_laplacian(u, s);
    CHECK(max_abs(L.values - std::pow(k, 2 * s) * u.values) < 1e-12 * std::pow(k, 2 * s));
    const Field R = riesz_potential(u, 0.5);
    CHECK(max_abs(R.values - std::pow(k, -0.5) * u.values) < 1e-13);
    // discrete Parseval: A = |k|^{2s} pi amp^2
    CHECK(kinetic_energy(u, s) == doctest::Approx(std::pow(k, 2 * s) * M_PI * 1.7 * 1.7).epsilon(1e-12));
  }
  const Field one = sample(g, [](const std::array<double, 3>&) { return 2.5; });
  CHECK(max_abs(fractional_laplacian(one, s).values) < 1e-14);
  CHECK(max_abs(riesz_potential(one, 0.5).values) < 1e-14);
  // s = 1 equals minus the second spectral derivative on band-limited data
  const Field u = sample(g, [](const std::array<double, 3>& x) { return std::sin(2 * x[0]) + 0.3 * std::cos(5 * x[0]); });
  const Eigen::VectorXd d2 = spectral_derivative(g, 0, spectral_derivative(g, 0, u.values));
  CHECK(max_abs(fractional_laplacian(u, 1.0).values + d2) < 1e-11);
}

TEST_CASE("periodic multipliers in two and three dimensions") {
  for (int N : {2, 3}) {
    const Grid g = make_grid(N, 16, 2 * M_PI, Topology::periodic);
    const Field u = sample(g, [N](const std::array<double, 3>& x) {
      return std::cos(2 * x[0] + (N > 1 ? x[1] : 0.0) - (N > 2 ? 3 * x[2] : 0.0));
    });
    const double k2 = 4 + (N > 1 ? 1 : 0) + (N > 2 ? 9 : 0);
    CHECK(max_abs(fractional_laplacian(u, 0.3).values - std::pow(k2, 0.3) * u.values) < 1e-12);
    CHECK(max_abs(riesz_potential(u, 0.7).values - std::pow(k2, -0.35) * u.values) < 1e-12);
  }
}

TEST_CASE("isolated kinetic energy of a Gaussian is exact") {
  const Grid g = make_grid(1, 2048, 40.0);
  const Field u = gaussian(g);
  for (double s : {0.2, 0.4, 0.75}) {
    // int |k|^{2s} e^{-k^2} dk / (2 pi) * 2 pi = Gamma(s + 1/2)
    CHECK(kinetic_energy(u, s) == doctest::Approx(std::tgamma(s + 0.5)).epsilon(1e-11));
  }
  // Hartree pairing of rho = e^{-x^2/2}: Gamma((1 - alpha)/2)
  const Field R = riesz_potential(u, 0.5);
  CHECK(dot(u, R) == doctest::Approx(std::tgamma(0.25)).epsilon(1e-11));
}

TEST_CASE("Riesz potential matches a direct kernel quadrature") {
  const Grid g = make_grid(1, 4096, 40.0);
  const Field rho = gaussian(g);
  REQUIRE(rho.values[0] < 1e-12);
  const Field phi = riesz_potential(rho, 0.5);
  // corrected trapezoid for A|x|^{-beta}: drop the singular node, add the
  // zeta-function end correction -2 zeta(beta) h^{1-beta} rho_i
  const double beta = 0.5, h = g.spacing(), A = riesz_normalization(1, 0.5);
  double worst = 0;
  for (int i = 256; i < 4096 - 256; i += 31) {
    double acc = 0;
    for (int j = 0; j < 4096; ++j)
      if (j != i) acc += rho.values[j] * std::pow(std::abs(g.coord(i) - g.coord(j)), -beta);
    const double ref = A * (h * acc - 2 * std::riemann_zeta(beta) * std::pow(h, 1 - beta) * rho.values[i]);
    worst = std::max(worst, std::abs(phi.values[i] - ref) / std::abs(ref));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("self-adjointness, positivity, parity") {
  std::mt19937_64 rng(7);
  for (Topology topo : {Topology::isolated, Topology::periodic}) {
    const Grid g = make_grid(1, 1024, 48.0, topo);
    for (int k = 0; k < 5; ++k) {
      const Field u = random_field(g, rng), v = random_field(g, rng);
      const double a = dot(v, fractional_laplacian(u, 0.4)), b = dot(u, fractional_laplacian(v, 0.4));
      CHECK(std::abs(a - b) <= 1e-10 * std::abs(a) + 1e-14);
      Field rho = u;
      rho.values = u.values.cwiseAbs();
      CHECK(dot(rho, riesz_potential(rho, 0.5)) >= 0);
    }
    const Field e = gaussian(g, 2.0);
    const Eigen::VectorXd r = riesz_potential(e, 0.5).values;
    for (int j = 0; j < g.points / 2; ++j) CHECK(std::abs(r[j] - r[g.points - 1 - j]) < 1e-13);
  }
}

TEST_CASE("mass and projection") {
  std::mt19937_64 rng(11);
  const Grid g = make_grid(1, 512, 32.0);
  const Field u = random_field(g, rng);
  const Field same = project_mass(u, mass(u));
  CHECK(max_abs(same.values - u.values) < 1e-15 * max_abs(u.values));
  for (double a : {0.1, 1.0, 7.0}) CHECK(std::abs(mass(project_mass(u, a)) - a) < 1e-14 * a);
  const Field projected = project_mass(u, 2.0);
  CHECK(g.cell_volume() * projected.values.squaredNorm() == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(mass(translate_cells(u, {5, 0, 0})) == doctest::Approx(mass(u)).epsilon(1e-15));
  CHECK_THROWS_AS(project_mass(zeros(g), 1.0), Error);
}

TEST_CASE("dilation") {
  const Grid g = make_grid(1, 1024, 40.0);
  const Field u = gaussian(g);
  CHECK(max_abs(dilate(u, 1.0).values - u.values) == 0);
  const Field u2 = dilate(u, 2.0);
  const Field ref = sample(g, [](const std::array<double, 3>& x) { return std::sqrt(2.0) * std::exp(-2 * x[0] * x[0]); });
  CHECK(max_abs(u2.values - ref.values) < 1e-8);

  std::mt19937_64 rng(3);
  for (Topology topo : {Topology::isolated, Topology::periodic}) {
    const Grid h = make_grid(1, 1024, 48.0, topo);
    for (int k = 0; k < 4; ++k) {
      const Field v = random_field(h, rng);
      for (double t : {0.5, 0.8, 1.3, 2.0})
        { const double r = mass(dilate(v, t)) / mass(v); INFO(t, " ", r, " ", mass(v)); CHECK(std::abs(r - 1) < 1e-8); }
      const Field a = dilate(dilate(v, 0.8), 1.25 * 1.3);
      const Field b = dilate(v, 1.3);
      CHECK(max_abs(a.values - b.values) < 1e-7 * max_abs(b.values));
    }
  }
  // content near Nyquist cannot be compressed by 2
  const Field rough = sample(g, [](const std::array<double, 3>& x) {
    return std::cos(0.9 * M_PI / (40.0 / 1024) * x[0]) * std::exp(-x[0] * x[0] / 8);
  });
  try {
    dilate(rough, 2.0);
    FAIL("expected AliasRisk");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::AliasRisk);
  }
  // wide field cannot be stretched: mass from beyond the box would be needed
  CHECK_THROWS_AS(dilate(gaussian(g, 6.0), 0.5), Error);
}

TEST_CASE("two-dimensional periodic dilation of a Gaussian") {
  const Grid g = make_grid(2, 64, 24.0, Topology::periodic);
  const Field u = gaussian(g, 1.5);
  const Field v = dilate(u, 1.5);
  const Field ref = gaussian(g, 1.0);
  CHECK(max_abs(v.values - 1.5 * ref.values) < 1e-9);
}

TEST_CASE("translation equivariance and determinism") {
  std::mt19937_64 rng(5);
  const Grid g = make_grid(1, 1024, 48.0);
  const Field u = random_field(g, rng);
  const Field R1 = riesz_potential(u, 0.5);
  const Field R2 = riesz_potential(u, 0.5);
  CHECK((R1.values.array() == R2.values.array()).all());
  const Field shifted = translate_cells(u, {7, 0, 0});
  const Field Rs = riesz_potential(shifted, 0.5);
  // the potential is not decayed: compare away from the wrapped cells
  const Eigen::VectorXd diff = Rs.values - translate_cells(R1, {7, 0, 0}).values;
  CHECK(max_abs(diff.segment(16, 1024 - 32)) < 1e-12 * max_abs(R1.values));
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(make_grid(1, 100, 1.0), Error);
  CHECK_THROWS_AS(make_grid(1, 8, 1.0), Error);
  CHECK_THROWS_AS(make_grid(1, 64, -1.0), Error);
  CHECK_THROWS_AS(make_grid(4, 64, 1.0), Error);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(64);
  bad[3] = NAN;
  CHECK_THROWS_AS(make_field(make_grid(1, 64, 1.0), bad), Error);
}
