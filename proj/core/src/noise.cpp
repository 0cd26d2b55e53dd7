#include "spect/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace spect {
namespace {

std::uint64_t poisson_knuth(Rng& rng, double lambda) {
  const double limit = std::exp(-lambda);
  std::uint64_t k = 0;
  double prod = rng.next_unit();
  while (prod > limit) {
    ++k;
    prod *= rng.next_unit();
  }
  return k;
}

std::uint64_t poisson_ptrs(Rng& rng, double lambda) {
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.next_unit() - 0.5;
    const double v = rng.next_unit();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -lambda + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

}  // namespace

void NoiseConfig::validate() const {
  if (!(counts_scale > 0.0) || !std::isfinite(counts_scale)) {
    throw std::invalid_argument("noise: counts_scale must be finite and > 0");
  }
}

std::uint64_t sample_poisson(Rng& rng, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("sample_poisson: lambda must be finite and >= 0");
  }
  if (lambda == 0.0) return 0;
  return lambda < 30.0 ? poisson_knuth(rng, lambda) : poisson_ptrs(rng, lambda);
}

Sinogram poissonize(const Sinogram& sinogram, const NoiseConfig& config) {
  config.validate();
  Rng rng(config.seed);
  std::vector<double> out(sinogram.size());
  const auto in = sinogram.data();
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = static_cast<double>(sample_poisson(rng, config.counts_scale * in[i])) /
             config.counts_scale;
  }
  return Sinogram(sinogram.np_angles(), sinogram.nr_bins(), std::move(out));
}

double counts_scale_for_peak(const Sinogram& sinogram, double peak_counts) {
  const double peak = sinogram.max();
  if (!(peak > 0.0)) throw std::invalid_argument("counts_scale_for_peak: empty sinogram");
  return peak_counts / peak;
}

}  // namespace spect
