#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "spect/nn/tensor.hpp"

namespace spect::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamSlot {
  std::vector<T> m;
  std::vector<T> v;
};

/// One bias-corrected Adam update of `params` in place. `step` is the
/// 1-based update count. Throws NumericError on a non-finite gradient.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamSlot<T>& slot,
               std::size_t step, const AdamConfig& config);

template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// Applies one update to every parameter using its accumulated gradient.
  void step(std::span<Parameter<T>* const> params);
  std::size_t steps() const noexcept { return steps_; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  AdamConfig config_;
  std::size_t steps_ = 0;
  std::vector<AdamSlot<T>> slots_;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace spect::nn
