#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spect/images.hpp"
#include "spect/nn/layers.hpp"
#include "spect/nn/tensor.hpp"

namespace spect::nn {

enum class ScalePreset { kPaper128, kDesk64 };

ScalePreset parse_preset(const std::string& name);
std::string to_string(ScalePreset preset);

/// Architecture constants of a preset.
struct PresetInfo {
  std::size_t image_n;       // output image side
  std::size_t np_angles;     // sinogram rows expected on input
  std::size_t nr_bins;       // sinogram columns expected on input
  std::size_t padded_rows;   // rows after symmetric zero padding
  std::vector<std::size_t> encoder_widths;  // four conv blocks
  std::size_t bottleneck;    // dense width
  Shape bottleneck_shape;    // C x 4 x 4 fed to the decoder
  std::vector<std::size_t> decoder_widths;  // one per upsampling block
  double dropout = 0.3;
  double leaky_slope = 0.01;
};

PresetInfo preset_info(ScalePreset preset);

/// Ordered layer list of the encoder-decoder:
///   encoder blocks 1-3: conv3x3, lrelu, conv3x3, lrelu, batchnorm, maxpool, dropout
///   encoder block 4:    conv3x3, lrelu, conv3x3, batchnorm, lrelu, dropout, flatten
///   bottleneck:         dense, lrelu, batchnorm, reshape
///   decoder blocks:     conv3x3, lrelu, conv3x3, lrelu, convT(s2), lrelu, batchnorm
///   head:               conv1x1 -> 1 channel, linear
std::vector<LayerSpec> cnnr_layer_specs(ScalePreset preset);

/// A named tensor in checkpoint order.
template <typename T>
struct StateEntry {
  std::string name;
  Tensor<T>* tensor;
};

template <typename T>
class CnnrModel {
 public:
  /// Builds the preset with He-normal weights drawn from per-layer child
  /// seeds of `seed`; biases and batchnorm shifts start at zero.
  static CnnrModel build(ScalePreset preset, std::uint64_t seed);

  CnnrModel(CnnrModel&&) noexcept = default;
  CnnrModel& operator=(CnnrModel&&) noexcept = default;

  ScalePreset preset() const noexcept { return preset_; }
  const PresetInfo& info() const noexcept { return info_; }
  const std::vector<LayerSpec>& specs() const noexcept { return specs_; }
  std::size_t num_layers() const noexcept { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_.at(i); }

  /// Per-sample input shape, 1 x padded_rows x nr_bins.
  Shape input_shape() const;
  /// Per-sample shape after every layer, starting with the input shape.
  std::vector<Shape> shape_trace() const;
  /// Human-readable table of layer index, spec and output shape.
  std::string shape_table() const;

  Tensor<T> forward(const Tensor<T>& batch, Mode mode);
  Tensor<T> backward(const Tensor<T>& grad_out);

  std::vector<Parameter<T>*> parameters();
  std::size_t parameter_count() const;
  void zero_grad();

  /// Parameters and buffers in layer order, named "<layer>.<kind>.<field>".
  std::vector<StateEntry<T>> state();
  /// Replaces batchnorm running statistics with population statistics over
  /// `batches` (batch statistics averaged, dropout off).
  void recalibrate_batchnorm(const std::vector<Tensor<T>>& batches);
  template <typename Fn>
  void recalibrate_batchnorm_with(Fn&& forward_all) {
    for_each_batchnorm([](BatchNorm<T>& bn) { bn.begin_calibration(); });
    forward_all();
    for_each_batchnorm([](BatchNorm<T>& bn) { bn.end_calibration(); });
  }
  /// Re-seeds every dropout layer from child seeds of `seed`.
  void reseed_dropout(std::uint64_t seed);

 private:
  CnnrModel() = default;
  template <typename Fn>
  void for_each_batchnorm(Fn&& fn) {
    for (auto& layer : layers_) {
      if (auto* bn = dynamic_cast<BatchNorm<T>*>(layer.get())) fn(*bn);
    }
  }

  ScalePreset preset_ = ScalePreset::kDesk64;
  PresetInfo info_{};
  std::vector<LayerSpec> specs_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

/// Scale applied to the He-normal draw of the linear 1x1 head.
inline constexpr double kHeadInitScale = 0.01;
/// Initial head bias: the untrained network emits a flat positive image
/// instead of a blank one.
inline constexpr double kHeadInitBias = 0.1;

/// Normalises by the sinogram maximum and zero-pads rows symmetrically to
/// the preset's padded height. Writes padded_rows * nr_bins values.
template <typename T>
void prepare_input(const Sinogram& sinogram, const PresetInfo& info, std::span<T> out);

/// Target image scaled to unit maximum.
template <typename T>
void prepare_target(const ActivityImage& image, std::span<T> out);

/// Converts raw network output to an activity image: clamp at zero, then
/// scale so the image carries the counts of the sinogram,
/// sum(image) = sum(sinogram) / (np_angles * pixel_size).
ActivityImage calibrate_output(std::span<const double> raw, std::size_t n,
                               const Sinogram& sinogram, double pixel_size = 1.0);

/// Inference-mode reconstruction of one or many sinograms.
template <typename T>
ActivityImage cnnr_forward(CnnrModel<T>& model, const Sinogram& sinogram);
template <typename T>
std::vector<ActivityImage> cnnr_forward_batch(CnnrModel<T>& model,
                                              std::span<const Sinogram> sinograms,
                                              std::size_t batch_size = 16);

extern template class CnnrModel<float>;
extern template class CnnrModel<double>;

}  // namespace spect::nn
