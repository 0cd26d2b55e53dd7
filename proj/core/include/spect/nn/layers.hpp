#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "spect/nn/tensor.hpp"
#include "spect/rng.hpp"

namespace spect::nn {

enum class LayerKind {
  kConv3x3,
  kConvTranspose3x3S2,
  kConv1x1,
  kMaxPool2x2,
  kBatchNorm,
  kLeakyRelu,
  kDropout,
  kDense,
  kFlatten,
  kReshape,
};

std::string to_string(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::kLeakyRelu;
  std::size_t in_channels = 0;   // channels, or input features for dense
  std::size_t out_channels = 0;  // channels, or output features for dense
  double rate = 0.0;             // dropout probability / leaky slope
  Shape reshape;                 // per-sample target shape for kReshape

  std::string to_string() const;
};

/// A differentiable stage operating on a whole batch. forward() caches what
/// backward() needs; backward() accumulates parameter gradients and returns
/// the gradient with respect to the layer input.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual LayerSpec spec() const = 0;
  /// Per-sample output shape for a per-sample input shape.
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
  virtual std::vector<Parameter<T>*> parameters() { return {}; }
  /// Non-trainable state that must survive a checkpoint (batchnorm running stats).
  virtual std::vector<std::pair<std::string, Tensor<T>*>> buffers() { return {}; }
};

/// Same-padded stride-1 convolution (cross-correlation), kernel 3 or 1.
/// Weights out x in x k x k, one bias per output channel.
template <typename T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel);
  LayerSpec spec() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }

  Parameter<T>& weight() noexcept { return weight_; }
  Parameter<T>& bias() noexcept { return bias_; }

 private:
  std::size_t in_, out_, k_;
  Parameter<T> weight_, bias_;
  Tensor<T> input_;
};

/// 3x3 transposed convolution, stride 2, padding 1, output padding 1:
/// H x W -> 2H x 2W. Weights in x out x 3 x 3.
template <typename T>
class ConvTranspose2d final : public Layer<T> {
 public:
  ConvTranspose2d(std::size_t in_channels, std::size_t out_channels);
  LayerSpec spec() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }

  Parameter<T>& weight() noexcept { return weight_; }
  Parameter<T>& bias() noexcept { return bias_; }

 private:
  std::size_t in_, out_;
  Parameter<T> weight_, bias_;
  Tensor<T> input_;
};

/// 2x2 max pooling, stride 2. Ties go to the first element in row-major order.
template <typename T>
class MaxPool2x2 final : public Layer<T> {
 public:
  LayerSpec spec() const override { return {LayerKind::kMaxPool2x2}; }
  Shape output_shape(const Shape& in) const override;
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;

 private:
  Shape input_dims_;
  std::vector<std::size_t> argmax_;
};

/// Batch normalisation over N (and H, W for 4-D inputs) per channel/feature.
template <typename T>
class BatchNorm final : public Layer<T> {
 public:
  explicit BatchNorm(std::size_t channels, double eps = 1e-5, double momentum = 0.9);
  LayerSpec spec() const override;
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  std::vector<Parameter<T>*> parameters() override { return {&gamma_, &beta_}; }
  std::vector<std::pair<std::string, Tensor<T>*>> buffers() override {
    return {{"running_mean", &running_mean_}, {"running_var", &running_var_}};
  }

  Parameter<T>& gamma() noexcept { return gamma_; }
  Parameter<T>& beta() noexcept { return beta_; }
  const Tensor<T>& running_mean() const noexcept { return running_mean_; }
  const Tensor<T>& running_var() const noexcept { return running_var_; }

  /// Running statistics become the average of the batch statistics seen in
  /// kCalibrate passes until end_calibration().
  void begin_calibration();
  void end_calibration();

 private:
  std::size_t channels_;
  double eps_, momentum_;
  Parameter<T> gamma_, beta_;
  Tensor<T> running_mean_, running_var_;
  // Cached from the last forward pass.
  Mode mode_ = Mode::kInference;
  Shape dims_;
  std::vector<T> xhat_;
  std::vector<double> inv_std_;
  std::vector<double> calib_mean_, calib_var_;
  double calib_weight_ = 0.0;
};

template <typename T>
class LeakyRelu final : public Layer<T> {
 public:
  explicit LeakyRelu(double alpha = 0.01) : alpha_(alpha) {}
  LayerSpec spec() const override { return {LayerKind::kLeakyRelu, 0, 0, alpha_}; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;

 private:
  double alpha_;
  Tensor<T> input_;
};

/// Inverted dropout: survivors are scaled by 1 / (1 - p) in training mode.
template <typename T>
class Dropout final : public Layer<T> {
 public:
  Dropout(double p, std::uint64_t seed);
  LayerSpec spec() const override { return {LayerKind::kDropout, 0, 0, p_}; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  void reseed(std::uint64_t seed) { rng_ = Rng(seed); }

 private:
  double p_;
  Rng rng_;
  std::vector<T> mask_;
  bool masked_ = false;
};

/// y = W x + b with W out x in.
template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(std::size_t in_features, std::size_t out_features);
  LayerSpec spec() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }

  Parameter<T>& weight() noexcept { return weight_; }
  Parameter<T>& bias() noexcept { return bias_; }

 private:
  std::size_t in_, out_;
  Parameter<T> weight_, bias_;
  Tensor<T> input_;
};

template <typename T>
class Flatten final : public Layer<T> {
 public:
  LayerSpec spec() const override { return {LayerKind::kFlatten}; }
  Shape output_shape(const Shape& in) const override { return {shape_size(in)}; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;

 private:
  Shape input_dims_;
};

template <typename T>
class Reshape final : public Layer<T> {
 public:
  explicit Reshape(Shape target) : target_(std::move(target)) {}
  LayerSpec spec() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;

 private:
  Shape target_;
  Shape input_dims_;
};

/// He-normal initialisation for a weight tensor with the given fan-in.
template <typename T>
void he_normal(Tensor<T>& weight, std::size_t fan_in, Rng& rng);

/// Instantiates a layer from its spec (weights zero, dropout seeded).
template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, std::uint64_t seed);

}  // namespace spect::nn
