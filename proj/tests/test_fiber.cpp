#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "chq/error.hpp"
#include "chq/fiber.hpp"
#include "chq/random.hpp"

using namespace chq;

namespace {

const ExponentSet desk = validate_regime(1, 0.4, 0.5, 3.0);

// Positive and well inside the band, so |u|^p stays resolved after compression by 2.
RandomFieldOptions positive() {
  RandomFieldOptions o;
  o.positive = true;
  o.band_fraction = 0.1;
  return o;
}

FiberProfile random_profile(std::mt19937_64& rng, const ExponentSet& e) {
  std::uniform_real_distribution<double> L(-6, 6);
  return make_profile(std::exp(L(rng)), std::exp(L(rng)), std::exp(L(rng)), std::exp(L(rng) / 3),
                      std::exp(L(rng) / 3), e);
}

}  // namespace

TEST_CASE("profile extraction") {
  std::mt19937_64 rng(1);
  const Grid g = make_grid(1, 1024, 48.0);
  const Field u = random_field(g, rng, positive());
  const FiberProfile a = extract_profile(u, desk, 0.3), b = extract_profile(u, desk, 0.3);
  CHECK(a.A == b.A);
  CHECK(a.Bp == b.Bp);
  CHECK(a.Bq == b.Bq);
  CHECK(a.a == mass(u));
  const double t0 = 1.3;
  const FiberProfile d = extract_profile(dilate(u, t0), desk, 0.3);
  CHECK(d.A == doctest::Approx(std::pow(t0, 2 * desk.s) * a.A).epsilon(1e-7));
  CHECK(d.Bp == doctest::Approx(std::pow(t0, desk.delta_p) * a.Bp).epsilon(1e-7));
  CHECK(d.Bq == doctest::Approx(std::pow(t0, desk.delta_q) * a.Bq).epsilon(1e-7));
  CHECK_THROWS_AS(extract_profile(zeros(g), desk, 0), Error);
}

TEST_CASE("fiber value matches the energy of dilated fields") {
  std::mt19937_64 rng(2);
  const Grid g = make_grid(1, 1024, 48.0);
  for (int k = 0; k < 20; ++k) {
    const Field u = random_field(g, rng, positive());
    const FiberProfile f = extract_profile(u, desk, 0.5);
    CHECK(fiber_value(f, 1.0) == doctest::Approx(energy(u, desk, Potential::constant(0.5)).total).epsilon(1e-14));
    for (double t : {0.5, 0.8, 1.25, 2.0}) {
      const double phi = fiber_value(f, t);
      const double J = energy(dilate(u, t), desk, Potential::constant(0.5)).total;
      CHECK(std::abs(phi - J) < 1e-7 * std::abs(phi));
      // P(u_t) = t^{2s} psi(t)
      const double P = pohozaev(dilate(u, t), desk);
      CHECK((P > 0) == (psi(f, t) > 0));
    }
  }
}

TEST_CASE("psi is decreasing with a single root") {
  std::mt19937_64 rng(3);
  const FiberProfile f = make_profile(2.0, 0.3, 1.1, 1.0, 0.0, desk);
  CHECK(psi(f, 1e-9) == doctest::Approx(2 * desk.s * 2.0).epsilon(1e-6));
  double prev = INFINITY;
  for (int i = 0; i < 100; ++i) {
    const double t = 1e-3 * std::pow(1e6, i / 99.0), v = psi(f, t);
    CHECK(v < prev);
    prev = v;
  }
  for (int k = 0; k < 100; ++k) CHECK(psi_sign_changes(random_profile(rng, desk), 1e-6, 1e6, 1000) == 1);
}

TEST_CASE("maximizer closed forms") {
  const double A = 1.7, Bq = 0.9, Bp = 0.4;
  const FiberMax q = fiber_maximizer(make_profile(A, 0, Bq, 1.0, 0.0, desk));
  const double tq = std::pow(2 * desk.s * desk.q * A / (desk.delta_q * Bq), 1 / (desk.delta_q - 2 * desk.s));
  CHECK(q.t_star == doctest::Approx(tq).epsilon(1e-10));
  const FiberMax p = fiber_maximizer(make_profile(A, Bp, 0, 1.0, 0.0, desk));
  const double tp = std::pow(2 * desk.s * desk.p * A / (desk.delta_p * Bp), 1 / (desk.delta_p - 2 * desk.s));
  CHECK(p.t_star == doctest::Approx(tp).epsilon(1e-10));
  const FiberProfile f = make_profile(A, Bp, Bq, 1.0, 0.2, desk);
  const FiberMax m = fiber_maximizer(f);
  CHECK(m.psi_bracket < 1e-12);
  CHECK(psi(f, m.t_star * (1 - 1e-6)) > 0);
  CHECK(psi(f, m.t_star * (1 + 1e-6)) < 0);
  CHECK(m.value == fiber_value(f, m.t_star));
  CHECK(m.value >= fiber_value(f, 1.0));
  CHECK_THROWS_AS(fiber_maximizer(make_profile(A, 0, 0, 1.0, 0.0, desk)), Error);
  CHECK_THROWS_AS(fiber_maximizer(make_profile(0, Bp, Bq, 1.0, 0.0, desk)), Error);
}

TEST_CASE("ray level is invariant along the ray") {
  std::mt19937_64 rng(4);
  const Grid g = make_grid(1, 1024, 48.0);
  for (int k = 0; k < 5; ++k) {
    const Field u = random_field(g, rng, positive());
    const FiberProfile f = extract_profile(u, desk, 0.0);
    const FiberMax m = fiber_maximizer(f);
    for (double t0 : {0.6, 1.5}) {
      const FiberMax md = fiber_maximizer(extract_profile(dilate(u, t0), desk, 0.0));
      CHECK(md.t_star == doctest::Approx(m.t_star / t0).epsilon(1e-7));
      CHECK(md.value == doctest::Approx(m.value).epsilon(1e-7));
    }
    CHECK(ray_level(u, desk, 0.0) >= energy(u, desk, Potential::constant(0)).total);
    for (double mu : {0.5, 1.0})
      CHECK(ray_level(u, desk, mu) - mu * mass(u) / 2 == doctest::Approx(ray_level(u, desk, 0.0)).epsilon(1e-13));
  }
}

TEST_CASE("fiber derivative identity") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> T(0.2, 3.0);
  for (int k = 0; k < 10; ++k) {
    const FiberProfile f = random_profile(rng, desk);
    const double t = T(rng), h = 1e-5 * t;
    const double fd = (fiber_value(f, t + h) - fiber_value(f, t - h)) / (2 * h);
    const double scale = std::abs(0.5 * std::pow(t, 2 * desk.s - 1) * 2 * desk.s * f.A) + std::abs(fd);
    CHECK(std::abs(fd - fiber_derivative(f, t)) < 1e-8 * scale);
  }
  FiberProfile f = make_profile(1.0, 0.5, 0.5, 2.0, 0.0, desk), g = f;
  g.mu = 1.3;
  for (double t : {0.1, 1.0, 7.0}) CHECK(fiber_value(g, t) - fiber_value(f, t) == doctest::Approx(1.3));
  CHECK(fiber_value(f, 1e-8) > f.mu * f.a / 2);
  CHECK(fiber_value(f, 1e-8) == doctest::Approx(f.mu * f.a / 2).epsilon(1e-5));
}

TEST_CASE("truncated fiber identity") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> T(0.6, 1.6);
  for (int k = 0; k < 10; ++k) {
    const FiberProfile f = random_profile(rng, desk);
    auto R = [&](double t) { return std::sqrt(std::pow(t, 2 * desk.s) * f.A + f.a); };
    const Truncation tr = make_truncation(0.97 * R(0.6), 1.03 * R(1.6));
    const double t = T(rng), h = 1e-4;
    const double fd = (truncated_fiber_value(f, t + h, tr) - truncated_fiber_value(f, t - h, tr)) / (2 * h);
    CHECK(fd == doctest::Approx(truncated_fiber_rhs(f, t, tr)).epsilon(1e-6));
  }
}

TEST_CASE("radius flag") {
  const FiberProfile f = make_profile(1.0, 0.5, 0.5, 1.0, 0.0, desk);
  const FiberMax m = fiber_maximizer(f);
  const double R = std::sqrt(std::pow(m.t_star, 2 * desk.s) + 1.0);
  CHECK(fiber_maximizer(f, make_truncation(2 * R, 4 * R)).radius_ok);
  CHECK_FALSE(fiber_maximizer(f, make_truncation(R / 2, R)).radius_ok);
}
