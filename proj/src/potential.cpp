#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "chq/harness.hpp"

namespace chq {

const char* potential_kind_name(PotentialKind k) {
  switch (k) {
    case PotentialKind::constant: return "constant";
    case PotentialKind::single_well: return "single_well";
    case PotentialKind::double_well: return "double_well";
    case PotentialKind::sampled: return "sampled";
  }
  return "?";
}

PotentialKind parse_potential_kind(const std::string& s) {
  for (PotentialKind k : {PotentialKind::constant, PotentialKind::single_well, PotentialKind::double_well,
                          PotentialKind::sampled})
    if (s == potential_kind_name(k)) return k;
  throw Error(Errc::ConfigError, "unknown potential kind '" + s + "'");
}

double distance(const Point& a, const Point& b, int N) {
  double r2 = 0;
  for (int d = 0; d < N; ++d) r2 += (a[d] - b[d]) * (a[d] - b[d]);
  return std::sqrt(r2);
}

int nearest(const Point& y, const std::vector<Point>& set, int N) {
  int best = -1;
  double bd = INFINITY;
  for (size_t i = 0; i < set.size(); ++i) {
    const double d = distance(y, set[i], N);
    if (d < bd) bd = d, best = int(i);
  }
  return best;
}

double distance_to(const Point& y, const std::vector<Point>& set, int N) {
  const int i = nearest(y, set, N);
  return i < 0 ? INFINITY : distance(y, set[i], N);
}

void validate(const PotentialSpec& spec, int N) {
  auto fail = [](const std::string& m) { throw Error(Errc::ConfigError, "potential: " + m); };
  switch (spec.kind) {
    case PotentialKind::constant:
      if (!(spec.V_inf >= 0)) fail("constant value must be >= 0");
      return;
    case PotentialKind::sampled:
      if (spec.file.empty()) fail("sampled potential needs a file");
      return;
    case PotentialKind::single_well:
      if (spec.centers.size() != 1) fail("single_well takes one centre");
      break;
    case PotentialKind::double_well:
      if (spec.centers.size() != 2) fail("double_well takes two centres");
      break;
  }
  if (!(spec.V_inf > 0)) fail("V_inf must be positive");
  if (!(spec.width > 0)) fail("width must be positive");
  if (!(spec.skew >= 0 && spec.skew < 1)) fail("skew must lie in [0, 1)");
  for (const Point& c : spec.centers)
    for (int d = N; d < 3; ++d)
      if (c[d] != 0) fail("centre has more coordinates than N");
}

namespace {

struct Sampled {
  Field f;
  double at(const Point& y) const {
    const Grid& g = f.grid;
    const int n = g.points;
    std::array<int, 3> i0{};
    std::array<double, 3> fr{};
    for (int d = 0; d < g.N; ++d) {
      const double z = std::clamp(y[d] / g.spacing() + 0.5 * (n - 1), 0.0, double(n - 1));
      i0[d] = std::min(int(z), n - 2);
      fr[d] = z - i0[d];
    }
    double v = 0;
    for (int corner = 0; corner < (1 << g.N); ++corner) {
      double w = 1;
      Eigen::Index idx = 0;
      for (int d = 0; d < g.N; ++d) {
        const int bit = (corner >> d) & 1;
        w *= bit ? fr[d] : 1 - fr[d];
        idx = idx * n + i0[d] + bit;
      }
      if (w != 0) v += w * f.values[idx];
    }
    return v;
  }
};

std::shared_ptr<const Sampled> load_sampled(const PotentialSpec& spec, int N) {
  auto s = std::make_shared<Sampled>(Sampled{load_snapshot(spec.file)});
  const Grid& g = s->f.grid;
  if (g.N != N) throw Error(Errc::GridMismatch, "sampled potential has N = " + std::to_string(g.N));
  if (g.points < 2) throw Error(Errc::ConfigError, "sampled potential needs two points per axis");
  if (s->f.values.minCoeff() < 0) throw Error(Errc::ConfigError, "sampled potential is negative somewhere");
  // V_inf from the boundary layer of the sample box
  double edge = INFINITY;
  const int n = g.points;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    Eigen::Index r = i;
    bool boundary = false;
    for (int d = 0; d < N; ++d, r /= n) boundary |= (r % n == 0 || r % n == n - 1);
    if (boundary) edge = std::min(edge, s->f.values[i]);
  }
  if (!(edge > 0)) throw Error(Errc::ConfigError, "sampled potential has no positive plateau at the box edge");
  return s;
}

}  // namespace

Potential make_potential(const PotentialSpec& spec, double eps, int N) {
  validate(spec, N);
  if (!(eps > 0)) throw Error(Errc::OutOfRange, "eps must be positive");
  if (spec.kind == PotentialKind::constant) return Potential::constant(spec.V_inf);
  Potential p;
  p.eps = eps;
  if (spec.kind == PotentialKind::sampled) {
    auto s = load_sampled(spec, N);
    p.V = [s](const Point& y) { return s->at(y); };
    return p;
  }
  const std::vector<Point> c = spec.centers;
  const double w2 = spec.width * spec.width, Vi = spec.V_inf, k = spec.skew;
  Point mid{};
  double r = 0;
  if (c.size() == 2) {
    for (int d = 0; d < 3; ++d) mid[d] = 0.5 * (c[0][d] + c[1][d]);
    r = 0.5 * distance(c[0], c[1], N);
  }
  p.V = [=](const Point& y) {
    double v = Vi;
    for (const Point& ci : c) v *= -std::expm1(-std::pow(distance(y, ci, N), 2) / w2);
    double psi;
    if (c.size() == 1) {
      psi = y[0] - c[0][0];
    } else {
      const double d = distance(y, mid, N);
      psi = r > 0 ? (d * d - r * r) / (2 * r) : d * d / (2 * spec.width);
    }
    return v * (1 + k * std::tanh(psi));
  };
  return p;
}

MSet detect_M(const PotentialSpec& spec, const Grid& grid, double delta, double tol) {
  if (!(delta > 0)) throw Error(Errc::OutOfRange, "delta must be positive");
  validate(spec, grid.N);
  MSet m;
  m.delta = delta;
  auto grid_points = [](const Grid& g) {
    std::vector<Point> pts;
    sample(g, [&](const Point& x) {
      pts.push_back(x);
      return 0.0;
    });
    return pts;
  };
  switch (spec.kind) {
    case PotentialKind::constant:
      if (spec.V_inf < tol) {
        m.M = grid_points(grid);
        m.degenerate = true;
      }
      break;
    case PotentialKind::single_well:
    case PotentialKind::double_well:
      m.M = spec.centers;
      break;
    case PotentialKind::sampled: {
      const Field f = load_snapshot(spec.file);
      const std::vector<Point> pts = grid_points(f.grid);
      for (size_t i = 0; i < pts.size(); ++i)
        if (f.values[Eigen::Index(i)] < tol) m.M.push_back(pts[i]);
      m.degenerate = !m.M.empty() && m.M.size() == pts.size();
      break;
    }
  }
  if (m.M.empty()) throw Error(Errc::EmptyM, std::string(potential_kind_name(spec.kind)) + " potential has no zero");
  // M itself, then the grid points within delta (builtin zeros need not be grid points)
  m.M_delta = m.M;
  for (const Point& x : grid_points(grid))
    if (distance_to(x, m.M, grid.N) <= delta) m.M_delta.push_back(x);
  return m;
}

double default_delta(const PotentialSpec& spec, const MSet& m, double fraction) {
  double sep = INFINITY;
  for (size_t i = 0; i < m.M.size(); ++i)
    for (size_t j = i + 1; j < m.M.size(); ++j) sep = std::min(sep, distance(m.M[i], m.M[j], 3));
  if (std::isfinite(sep) && sep > 0) return fraction * sep;
  return fraction * spec.width;
}

Point barycenter(const Field& u, double eps, double radius) {
  const Grid& g = u.grid;
  const double a = mass(u);
  if (!(a > 0)) throw Error(Errc::ZeroField, "barycenter of the zero field");
  Point b{};
  const Eigen::VectorXd rho = u.values.cwiseAbs2();
  Eigen::Index i = 0;
  sample(g, [&](const Point& x) {
    double r2 = 0;
    for (int d = 0; d < g.N; ++d) r2 += eps * eps * x[d] * x[d];
    const double c = chi(std::sqrt(r2) / radius) * rho[i++];
    for (int d = 0; d < g.N; ++d) b[d] += eps * x[d] * c;
    return 0.0;
  });
  for (int d = 0; d < g.N; ++d) b[d] *= g.cell_volume() / a;
  return b;
}

}  // namespace chq
