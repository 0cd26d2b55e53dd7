#pragma once

#include <cstdint>

#include "spect/images.hpp"
#include "spect/rng.hpp"

namespace spect {

struct NoiseConfig {
  /// Expected photon counts per unit of sinogram intensity.
  double counts_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Poisson(lambda) draw: Knuth's product method below 30, Hormann's PTRS
/// transformed rejection above. Throws std::invalid_argument for negative or
/// non-finite lambda.
std::uint64_t sample_poisson(Rng& rng, double lambda);

/// Each bin becomes Poisson(scale * y) / scale, sampled in row-major order
/// from a generator seeded with config.seed.
Sinogram poissonize(const Sinogram& sinogram, const NoiseConfig& config);

/// counts_scale that makes the largest bin of `sinogram` expect `peak_counts`.
double counts_scale_for_peak(const Sinogram& sinogram, double peak_counts);

}  // namespace spect
