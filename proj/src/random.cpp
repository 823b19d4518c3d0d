#include "chq/random.hpp"

#include <cmath>

namespace chq {

Field random_field(const Grid& g, std::mt19937_64& rng, const RandomFieldOptions& opt) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double w = opt.width_fraction * g.extent;
  const double kmax = opt.band_fraction * M_PI / g.spacing();
  std::array<double, 3> x0{};
  for (int d = 0; d < g.N; ++d) x0[d] = (U(rng) - 0.5) * 0.05 * g.extent;
  struct Mode {
    double amp, phase;
    std::array<double, 3> k;
  };
  std::vector<Mode> modes(opt.modes);
  for (auto& m : modes) {
    m.amp = (opt.positive ? 0.3 : 1.0) * (2 * U(rng) - 1) / opt.modes;
    m.phase = 2 * M_PI * U(rng);
    for (int d = 0; d < g.N; ++d) m.k[d] = (2 * U(rng) - 1) * kmax;
  }
  const double base = opt.positive ? 1.0 : U(rng);
  return sample(g, [&](const std::array<double, 3>& x) {
    double r2 = 0;
    for (int d = 0; d < g.N; ++d) r2 += (x[d] - x0[d]) * (x[d] - x0[d]);
    double v = base;
    for (const auto& m : modes) {
      double ph = m.phase;
      for (int d = 0; d < g.N; ++d) ph += m.k[d] * (x[d] - x0[d]);
      v += m.amp * std::cos(ph);
    }
    return v * std::exp(-r2 / (2 * w * w));
  });
}

}  // namespace chq
