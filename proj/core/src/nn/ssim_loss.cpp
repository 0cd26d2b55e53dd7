#include "spect/nn/ssim_loss.hpp"

#include <algorithm>
#include <vector>

#include "spect/error.hpp"

namespace spect::nn {

template <typename T>
LossResult<T> ssim_loss(const Tensor<T>& prediction, const Tensor<T>& target,
                        const SsimConfig& config) {
  if (prediction.dims() != target.dims() || prediction.rank() != 4 || prediction.dim(1) != 1 ||
      prediction.dim(0) == 0) {
    throw ShapeError("ssim_loss: prediction and target must both be N x 1 x H x W, got " +
                     shape_to_string(prediction.dims()) + " and " +
                     shape_to_string(target.dims()));
  }
  const std::size_t n = prediction.dim(0), h = prediction.dim(2), w = prediction.dim(3);
  const std::size_t plane = h * w;
  LossResult<T> result{0.0, Tensor<T>(prediction.dims())};
  std::vector<double> x(plane), y(plane), g(plane);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::copy_n(prediction.data() + s * plane, plane, x.begin());
    std::copy_n(target.data() + s * plane, plane, y.begin());
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    SsimConfig cfg = config;
    cfg.dynamic_range = std::max(*hi - *lo, kMinDynamicRange);
    const double value = ssim_with_gradient({x, h, w}, {y, h, w}, cfg, g);
    result.loss += (1.0 - value) * inv_n;
    T* out = result.grad.data() + s * plane;
    for (std::size_t i = 0; i < plane; ++i) out[i] = static_cast<T>(-g[i] * inv_n);
  }
  return result;
}

template LossResult<float> ssim_loss(const Tensor<float>&, const Tensor<float>&, const SsimConfig&);
template LossResult<double> ssim_loss(const Tensor<double>&, const Tensor<double>&,
                                      const SsimConfig&);

}  // namespace spect::nn
