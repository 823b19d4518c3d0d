#pragma once

#include <random>

#include "chq/spectral.hpp"

namespace chq {

struct RandomFieldOptions {
  double width_fraction = 1.0 / 24;  // Gaussian envelope width / extent
  double band_fraction = 0.25;       // carrier frequencies up to this fraction of Nyquist
  int modes = 6;
  bool positive = false;             // envelope-dominated, strictly positive samples
};

// Smooth, effectively band-limited and decayed test field.
Field random_field(const Grid& g, std::mt19937_64& rng, const RandomFieldOptions& opt = {});

}  // namespace chq
