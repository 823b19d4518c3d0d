#include "chq/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/FFT>
#include <cmath>
#include <cstdio>
#include <complex>
#include <map>
#include <memory>
#include <mutex>

#include "chq/error.hpp"

namespace chq {

using cplx = std::complex<double>;

const char* topology_name(Topology t) { return t == Topology::isolated ? "isolated" : "periodic"; }

Topology parse_topology(const std::string& s) {
  if (s == "isolated") return Topology::isolated;
  if (s == "periodic") return Topology::periodic;
  throw Error(Errc::ConfigError, "unknown topology '" + s + "'");
}

double Grid::cell_volume() const { return std::pow(spacing(), N); }

Eigen::Index Grid::size() const {
  Eigen::Index n = 1;
  for (int d = 0; d < N; ++d) n *= points;
  return n;
}

Grid make_grid(int N, int points, double extent, Topology topology) {
  if (N < 1 || N > 3) throw Error(Errc::OutOfRange, "grid dimension must be 1, 2 or 3");
  if (points < 16 || (points & (points - 1)) != 0)
    throw Error(Errc::OutOfRange, "points per axis must be a power of two >= 16");
  if (!(extent > 0) || !std::isfinite(extent)) throw Error(Errc::OutOfRange, "extent must be positive");
  if (topology == Topology::isolated && N != 1)
    throw Error(Errc::OutOfRange, "isolated topology is implemented for N=1 only");
  return Grid{N, points, extent, topology};
}

void require_same_grid(const Grid& a, const Grid& b) {
  if (a != b) throw Error(Errc::GridMismatch, "fields live on different grids");
}

void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw Error(Errc::NonFinite, std::string(what) + " contains NaN/Inf");
}

Field make_field(const Grid& g, Eigen::VectorXd values) {
  if (values.size() != g.size()) throw Error(Errc::GridMismatch, "sample count does not match grid");
  require_finite(values, "field");
  return Field{g, std::move(values), std::nullopt};
}

Field zeros(const Grid& g) { return Field{g, Eigen::VectorXd::Zero(g.size()), std::nullopt}; }

double dot(const Field& u, const Field& v) {
  require_same_grid(u.grid, v.grid);
  return u.grid.cell_volume() * u.values.dot(v.values);
}

double mass(const Field& u) {
  if (u.cached_mass) return *u.cached_mass;
  return u.grid.cell_volume() * u.values.squaredNorm();
}

Field project_mass(const Field& u, double a) {
  if (!(a > 0)) throw Error(Errc::OutOfRange, "mass must be positive");
  const double m = u.grid.cell_volume() * u.values.squaredNorm();
  if (!(m > 0)) throw Error(Errc::ZeroField, "cannot project the zero field");
  Field out{u.grid, u.values * std::sqrt(a / m), std::nullopt};
  out.cached_mass = a;
  return out;
}

// ---------------------------------------------------------------- quadrature

void gauss_laguerre(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    J(i, i) = 2 * i + 1;
    if (i + 1 < n) J(i, i + 1) = J(i + 1, i) = i + 1;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes = es.eigenvalues();
  weights.resize(n);
  // Newton polish on L_n in extended precision, then the classical weight
  // formula; double-precision recurrences lose ~1e-13 in the weights.
  using ld = long double;
  auto eval = [n](ld x, ld& Ln, ld& Lnm1, ld& Lnp1) {
    ld a = 1, b = 1 - x;
    for (int k = 1; k < n; ++k) {
      ld c = ((2 * k + 1 - x) * b - k * a) / (k + 1);
      a = b;
      b = c;
    }
    Lnm1 = a;
    Ln = b;
    Lnp1 = ((2 * n + 1 - x) * Ln - n * Lnm1) / (n + 1);
  };
  for (int i = 0; i < n; ++i) {
    ld x = nodes[i], Ln, Lm, Lp;
    for (int it = 0; it < 8; ++it) {
      eval(x, Ln, Lm, Lp);
      const ld dL = n * (Ln - Lm) / x;
      const ld dx = Ln / dL;
      x -= dx;
      if (std::abs(dx) < 1e-19L * x) break;
    }
    eval(x, Ln, Lm, Lp);
    nodes[i] = double(x);
    weights[i] = double(x / (ld(n + 1) * (n + 1) * Lp * Lp));
  }
}

Eigen::VectorXd lattice_coefficients(double g, int count) {
  static const auto rule = [] {
    std::pair<Eigen::VectorXd, Eigen::VectorXd> r;
    gauss_laguerre(80, r.first, r.second);
    return r;
  }();
  const auto& y = rule.first;
  const auto& w = rule.second;
  Eigen::VectorXd c(count);
  c[0] = std::pow(M_PI, g) / (g + 1);
  // int_0^X u^g e^{iu} du = Gamma(g+1) e^{i pi (g+1)/2} - i e^{iX} int_0^inf (X+iy)^g e^{-y} dy.
  // With e^{iX} = (-1)^m the real part of the second term only involves
  // Im (1 + iy/X)^g, which is summed without cancellation.
  const double full = std::tgamma(g + 1) * std::cos(M_PI * (g + 1) / 2);
  for (int m = 1; m < count; ++m) {
    const double X = m * M_PI;
    double im = 0;
    for (int k = 0; k < y.size(); ++k) {
      const double r = y[k] / X;
      im += w[k] * std::exp(0.5 * g * std::log1p(r * r)) * std::sin(g * std::atan(r));
    }
    const double tail = ((m % 2) ? -1.0 : 1.0) * std::pow(X, g) * im;
    c[m] = (full + tail) * std::pow(double(m), -g - 1) / M_PI;
  }
  return c;
}

// ---------------------------------------------------------------- FFT plumbing

namespace {

Eigen::FFT<double>& fft() {
  thread_local Eigen::FFT<double> f;
  return f;
}

// Circulant embedding of the symmetric Toeplitz kernel, transformed.
std::shared_ptr<const Eigen::VectorXd> toeplitz_symbol(int n, double g) {
  static std::mutex mu;
  static std::map<std::pair<int, double>, std::shared_ptr<const Eigen::VectorXd>> cache;
  {
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find({n, g});
    if (it != cache.end()) return it->second;
  }
  const Eigen::VectorXd c = lattice_coefficients(g, n);
  Eigen::VectorXcd col = Eigen::VectorXcd::Zero(2 * n);
  for (int m = 0; m < n; ++m) col[m] = c[m];
  for (int m = 1; m < n; ++m) col[2 * n - m] = c[m];
  Eigen::VectorXcd S(2 * n);
  fft().fwd(S, col);
  auto sym = std::make_shared<const Eigen::VectorXd>(S.real());
  std::lock_guard<std::mutex> lk(mu);
  return cache.emplace(std::make_pair(n, g), sym).first->second;
}

// In-place transform along every axis of a row-major n^N block.
void fftn(const Grid& g, Eigen::VectorXcd& data, bool inverse) {
  const int n = g.points;
  Eigen::VectorXcd line(n), out(n);
  for (int axis = 0; axis < g.N; ++axis) {
    Eigen::Index stride = 1;
    for (int d = axis + 1; d < g.N; ++d) stride *= n;
    const Eigen::Index total = g.size();
    for (Eigen::Index base = 0; base < total; ++base) {
      if ((base / stride) % n != 0) continue;
      for (int j = 0; j < n; ++j) line[j] = data[base + j * stride];
      if (inverse) fft().inv(out, line);
      else fft().fwd(out, line);
      for (int j = 0; j < n; ++j) data[base + j * stride] = out[j];
    }
  }
}

// Signed integer frequency of DFT index j.
inline int freq(int j, int n) { return j <= n / 2 ? j : j - n; }

template <typename F>
void for_each_mode(const Grid& g, F&& f) {
  const int n = g.points;
  const double k0 = 2 * M_PI / g.extent;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    Eigen::Index r = i;
    double k2 = 0;
    for (int d = 0; d < g.N; ++d) {
      const double k = k0 * freq(int(r % n), n);
      k2 += k * k;
      r /= n;
    }
    f(i, k2);
  }
}

}  // namespace

Eigen::VectorXd apply_symbol(const Grid& g, double gamma, const Eigen::VectorXd& u) {
  if (u.size() != g.size()) throw Error(Errc::GridMismatch, "sample count does not match grid");
  if (g.topology == Topology::isolated) {
    const int n = g.points;
    const auto S = toeplitz_symbol(n, gamma);
    Eigen::VectorXcd pad = Eigen::VectorXcd::Zero(2 * n), U(2 * n), out(2 * n);
    for (int j = 0; j < n; ++j) pad[j] = u[j];
    fft().fwd(U, pad);
    U.array() *= S->array();
    fft().inv(out, U);
    return std::pow(g.spacing(), -gamma) * out.head(n).real();
  }
  Eigen::VectorXcd data = u.cast<cplx>();
  fftn(g, data, false);
  for_each_mode(g, [&](Eigen::Index i, double k2) {
    data[i] *= (k2 > 0) ? std::pow(k2, gamma / 2) : 0.0;
  });
  fftn(g, data, true);
  return data.real();
}

Eigen::VectorXd apply_resolvent(const Grid& g, double gamma, double scale, double shift,
                                const Eigen::VectorXd& u) {
  if (u.size() != g.size()) throw Error(Errc::GridMismatch, "sample count does not match grid");
  if (!(shift > 0)) throw Error(Errc::OutOfRange, "resolvent shift must be positive");
  Eigen::VectorXcd data = u.cast<cplx>();
  fftn(g, data, false);
  for_each_mode(g, [&](Eigen::Index i, double k2) { data[i] /= shift + scale * std::pow(k2, gamma / 2); });
  fftn(g, data, true);
  return data.real();
}

Field fractional_laplacian(const Field& u, double s) {
  if (!(s > 0 && s <= 1)) throw Error(Errc::OutOfRange, "s must lie in (0,1]");
  require_finite(u.values, "field");
  return Field{u.grid, apply_symbol(u.grid, 2 * s, u.values), std::nullopt};
}

double kinetic_energy(const Field& u, double s) {
  return dot(u, fractional_laplacian(u, s));
}

Field riesz_potential(const Field& rho, double alpha) {
  if (!(alpha > 0 && alpha < rho.grid.N)) throw Error(Errc::OutOfRange, "alpha must lie in (0,N)");
  require_finite(rho.values, "density");
  return Field{rho.grid, apply_symbol(rho.grid, -alpha, rho.values), std::nullopt};
}

Eigen::VectorXd spectral_derivative(const Grid& g, int axis, const Eigen::VectorXd& u) {
  if (axis < 0 || axis >= g.N) throw Error(Errc::OutOfRange, "axis out of range");
  if (g.topology == Topology::isolated) {
    // derivative of the sinc interpolant at the nodes: Toeplitz (-1)^m / (m h)
    const int n = g.points;
    const double h = g.spacing();
    Eigen::VectorXcd col = Eigen::VectorXcd::Zero(2 * n), pad = Eigen::VectorXcd::Zero(2 * n);
    for (int m = 1; m < n; ++m) {
      const double d = ((m % 2) ? -1.0 : 1.0) / (m * h);
      col[m] = d;
      col[2 * n - m] = -d;
    }
    for (int j = 0; j < n; ++j) pad[j] = u[j];
    Eigen::VectorXcd C(2 * n), U(2 * n), out(2 * n);
    fft().fwd(C, col);
    fft().fwd(U, pad);
    U.array() *= C.array();
    fft().inv(out, U);
    return out.head(n).real();
  }
  const int n = g.points;
  const double k0 = 2 * M_PI / g.extent;
  Eigen::VectorXcd data = u.cast<cplx>();
  fftn(g, data, false);
  Eigen::Index stride = 1;
  for (int d = axis + 1; d < g.N; ++d) stride *= n;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const int j = int((i / stride) % n);
    const int m = freq(j, n);
    data[i] *= (2 * std::abs(m) == n) ? cplx(0) : cplx(0, k0 * m);
  }
  fftn(g, data, true);
  return data.real();
}

// ---------------------------------------------------------------- dilation

double alias_fraction(const Field& u, double t, const std::array<double, 3>& center) {
  const Grid& g = u.grid;
  const int n = g.points;
  const double total = u.values.squaredNorm();
  if (total == 0 || t == 1) return 0;
  if (t > 1) {
    // spectrum of the interpolant, sampled on a 2x refined frequency lattice
    const int M = (g.topology == Topology::isolated) ? 2 * n : n;
    double outside = 0, all = 0;
    if (g.N == 1) {
      Eigen::VectorXcd pad = Eigen::VectorXcd::Zero(M), U(M);
      for (int j = 0; j < n; ++j) pad[j] = u.values[j];
      fft().fwd(U, pad);
      for (int j = 0; j < M; ++j) {
        const double kap = 2.0 * std::abs(freq(j, M)) / M;  // in units of pi
        const double e = std::norm(U[j]);
        all += e;
        if (kap * t > 1 + 1e-12) outside += e;
      }
    } else {
      Eigen::VectorXcd data = u.values.cast<cplx>();
      fftn(g, data, false);
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        Eigen::Index r = i;
        bool out = false;
        for (int d = 0; d < g.N; ++d) {
          const double kap = 2.0 * std::abs(freq(int(r % n), n)) / n;
          if (kap * t > 1 + 1e-12) out = true;
          r /= n;
        }
        const double e = std::norm(data[i]);
        all += e;
        if (out) outside += e;
      }
    }
    return outside / all;
  }
  // t < 1: mass that the dilation pushes beyond the box
  const double half = 0.5 * g.extent;
  double outside = 0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    Eigen::Index r = i;
    bool out = false;
    for (int d = 0; d < g.N; ++d) {
      const double c = center[d];
      if (std::abs(c + (g.coord(int(r % n)) - c) / t) > half) out = true;
      r /= n;
    }
    if (out) outside += u.values[i] * u.values[i];
  }
  return outside / total;
}

namespace {

// Row j: weights of the 1D interpolant evaluated at t * x_j.
void dilation_row(const Grid& g, double t, double xc, int j, Eigen::VectorXd& w) {
  const int n = g.points;
  const double c = 0.5 * (n - 1);
  const double st = std::sqrt(t);
  const double zc = xc / g.spacing();
  const double z = zc + t * (j - c - zc);  // target coordinate in units of h
  const double zi = z + c;       // ... as a fractional index
  w.resize(n);
  if (g.topology == Topology::isolated) {
    const double k = std::round(zi);
    const double f = zi - k;
    const double sf = std::sin(M_PI * f) / M_PI;
    for (int m = 0; m < n; ++m) {
      const double d = zi - m;
      if (std::abs(d) < 1e-3) {
        const double a = M_PI * d;
        w[m] = st * ((d == 0) ? 1.0 : std::sin(a) / a);
      } else {
        // sin(pi d) = (-1)^(k - m) sin(pi f)
        const long km = long(k) - m;
        w[m] = st * ((km % 2) ? -sf : sf) / d;
      }
    }
    return;
  }
  // even-n trigonometric interpolant (Nyquist split symmetrically); the field
  // is zero outside the box, not its periodic image
  if (std::abs(z) > 0.5 * n) {
    w.setZero();
    return;
  }
  for (int m = 0; m < n; ++m) {
    const double th = 2 * M_PI * (zi - m) / n;
    const double s2 = std::sin(0.5 * th);
    double v;
    if (std::abs(s2) < 1e-12) v = std::cos(0.5 * n * th) > 0 ? 1.0 : -1.0;
    else v = std::sin(0.5 * n * th) / (n * std::tan(0.5 * th));
    w[m] = st * v;
  }
}

// Applies the 1D interpolation along one line; O(n^2) without storing the matrix.
Eigen::VectorXd dilate_line(const Grid& g, double t, double xc, const Eigen::VectorXd& line) {
  const int n = g.points;
  Eigen::VectorXd out(n), w;
  for (int j = 0; j < n; ++j) {
    dilation_row(g, t, xc, j, w);
    out[j] = w.dot(line);
  }
  return out;
}

}  // namespace

Field dilate(const Field& u, double t, const DilateOptions& opt) {
  if (!(t > 0) || !std::isfinite(t)) throw Error(Errc::OutOfRange, "dilation factor must be positive");
  require_finite(u.values, "field");
  if (t == 1) return u;
  if (opt.check) {
    const double a = alias_fraction(u, t, opt.center);
    if (a > opt.alias_tol) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "dilation by %.6g has alias fraction %.3e (tolerance %.1e)", t, a,
                    opt.alias_tol);
      throw Error(Errc::AliasRisk, buf);
    }
  }
  const Grid& g = u.grid;
  const int n = g.points;
  Eigen::VectorXd v = u.values;
  if (g.N == 1) {
    v = dilate_line(g, t, opt.center[0], u.values);
  } else {
    Eigen::VectorXd line(n);
    for (int axis = 0; axis < g.N; ++axis) {
      Eigen::Index stride = 1;
      for (int d = axis + 1; d < g.N; ++d) stride *= n;
      for (Eigen::Index base = 0; base < g.size(); ++base) {
        if ((base / stride) % n != 0) continue;
        for (int j = 0; j < n; ++j) line[j] = v[base + j * stride];
        const Eigen::VectorXd out = dilate_line(g, t, opt.center[axis], line);
        for (int j = 0; j < n; ++j) v[base + j * stride] = out[j];
      }
    }
  }
  return Field{g, std::move(v), std::nullopt};
}

Field translate_cells(const Field& u, const std::array<int, 3>& shift) {
  const Grid& g = u.grid;
  const int n = g.points;
  Eigen::VectorXd v(u.values.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    Eigen::Index r = i, target = 0, mul = 1;
    for (int d = g.N - 1; d >= 0; --d) {
      const int j = int(r % n);
      r /= n;
      const int jt = ((j + shift[d]) % n + n) % n;
      target += jt * mul;
      mul *= n;
    }
    v[target] = u.values[i];
  }
  Field out{g, std::move(v), u.cached_mass};
  return out;
}

}  // namespace chq
