#include "spect/nn/adam.hpp"

#include <cmath>

#include "spect/error.hpp"

namespace spect::nn {

template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamSlot<T>& slot,
               std::size_t step, const AdamConfig& config) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: gradient size mismatch");
  if (step == 0) throw std::invalid_argument("adam_step: step count is 1-based");
  if (slot.m.size() != params.size()) {
    slot.m.assign(params.size(), T{0});
    slot.v.assign(params.size(), T{0});
  }
  for (T g : grads) {
    if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient");
  }
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double m = b1 * slot.m[i] + (1.0 - b1) * g;
    const double v = b2 * slot.v[i] + (1.0 - b2) * g * g;
    slot.m[i] = static_cast<T>(m);
    slot.v[i] = static_cast<T>(v);
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    params[i] = static_cast<T>(params[i] - config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon));
  }
}

template <typename T>
void Adam<T>::step(std::span<Parameter<T>* const> params) {
  if (slots_.size() != params.size()) slots_.resize(params.size());
  ++steps_;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter<T>& p = *params[k];
    try {
      adam_step<T>(p.value.values(), p.ensure_grad().values(), slots_[k], steps_, config_);
    } catch (const NumericError&) {
      throw NumericError("Adam: non-finite gradient in parameter '" + p.name + "' (#" +
                         std::to_string(k) + ") at step " + std::to_string(steps_));
    }
  }
}

template void adam_step<float>(std::span<float>, std::span<const float>, AdamSlot<float>&,
                               std::size_t, const AdamConfig&);
template void adam_step<double>(std::span<double>, std::span<const double>, AdamSlot<double>&,
                                std::size_t, const AdamConfig&);
template class Adam<float>;
template class Adam<double>;

}  // namespace spect::nn
