#pragma once

#include "spect/metrics.hpp"
#include "spect/nn/tensor.hpp"

namespace spect::nn {

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> grad;
};

/// Floor applied to the target dynamic range so blank targets stay well posed.
inline constexpr double kMinDynamicRange = 1e-3;

/// Batch mean of 1 - SSIM(prediction_i, target_i) over N x 1 x H x W
/// tensors, with L taken per sample from the target range, and its exact
/// gradient with respect to the prediction. Window settings come from
/// `config`; its dynamic_range is ignored.
template <typename T>
LossResult<T> ssim_loss(const Tensor<T>& prediction, const Tensor<T>& target,
                        const SsimConfig& config);

extern template LossResult<float> ssim_loss(const Tensor<float>&, const Tensor<float>&,
                                            const SsimConfig&);
extern template LossResult<double> ssim_loss(const Tensor<double>&, const Tensor<double>&,
                                             const SsimConfig&);

}  // namespace spect::nn
