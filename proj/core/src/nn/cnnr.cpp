#include "spect/nn/cnnr.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "spect/error.hpp"
#include "spect/rng.hpp"

namespace spect::nn {
namespace {

constexpr std::uint64_t kDropoutSeedSalt = 0xd20b0a7ULL;

}  // namespace

ScalePreset parse_preset(const std::string& name) {
  if (name == "paper-128") return ScalePreset::kPaper128;
  if (name == "desk-64") return ScalePreset::kDesk64;
  throw std::invalid_argument("unknown preset '" + name + "' (expected paper-128 or desk-64)");
}

std::string to_string(ScalePreset preset) {
  return preset == ScalePreset::kPaper128 ? "paper-128" : "desk-64";
}

PresetInfo preset_info(ScalePreset preset) {
  PresetInfo info;
  if (preset == ScalePreset::kPaper128) {
    info.image_n = 128;
    info.np_angles = 24;
    info.nr_bins = 128;
    info.padded_rows = 32;
    info.encoder_widths = {32, 64, 128, 256};
    info.bottleneck = 4096;
    info.bottleneck_shape = {256, 4, 4};
    info.decoder_widths = {256, 128, 64, 32, 8};
  } else {
    info.image_n = 64;
    info.np_angles = 24;
    info.nr_bins = 64;
    info.padded_rows = 32;
    info.encoder_widths = {16, 32, 64, 128};
    info.bottleneck = 2048;
    info.bottleneck_shape = {128, 4, 4};
    info.decoder_widths = {128, 64, 32, 16};
  }
  return info;
}

std::vector<LayerSpec> cnnr_layer_specs(ScalePreset preset) {
  const PresetInfo info = preset_info(preset);
  const double slope = info.leaky_slope;
  auto conv = [](std::size_t in, std::size_t out) { return LayerSpec{LayerKind::kConv3x3, in, out}; };
  auto bn = [](std::size_t c) { return LayerSpec{LayerKind::kBatchNorm, c, c}; };
  const LayerSpec act{LayerKind::kLeakyRelu, 0, 0, slope};
  const LayerSpec drop{LayerKind::kDropout, 0, 0, info.dropout};

  std::vector<LayerSpec> specs;
  std::size_t in = 1;
  for (std::size_t b = 0; b < 3; ++b) {
    const std::size_t w = info.encoder_widths[b];
    specs.insert(specs.end(), {conv(in, w), act, conv(w, w), act, bn(w),
                               LayerSpec{LayerKind::kMaxPool2x2}, drop});
    in = w;
  }
  const std::size_t w4 = info.encoder_widths[3];
  specs.insert(specs.end(), {conv(in, w4), act, conv(w4, w4), bn(w4), act, drop,
                             LayerSpec{LayerKind::kFlatten}});
  const std::size_t flat = w4 * (info.padded_rows / 8) * (info.nr_bins / 8);
  specs.insert(specs.end(), {LayerSpec{LayerKind::kDense, flat, info.bottleneck}, act,
                             bn(info.bottleneck)});
  LayerSpec reshape{LayerKind::kReshape};
  reshape.reshape = info.bottleneck_shape;
  specs.push_back(reshape);
  in = info.bottleneck_shape[0];
  for (std::size_t w : info.decoder_widths) {
    specs.insert(specs.end(), {conv(in, w), act, conv(w, w), act,
                               LayerSpec{LayerKind::kConvTranspose3x3S2, w, w}, act, bn(w)});
    in = w;
  }
  specs.push_back(LayerSpec{LayerKind::kConv1x1, in, 1});
  return specs;
}

template <typename T>
CnnrModel<T> CnnrModel<T>::build(ScalePreset preset, std::uint64_t seed) {
  CnnrModel model;
  model.preset_ = preset;
  model.info_ = preset_info(preset);
  model.specs_ = cnnr_layer_specs(preset);
  for (std::size_t i = 0; i < model.specs_.size(); ++i) {
    const LayerSpec& spec = model.specs_[i];
    auto layer = make_layer<T>(spec, child_seed(seed ^ kDropoutSeedSalt, i));
    Rng rng(child_seed(seed, i));
    switch (spec.kind) {
      case LayerKind::kConv3x3:
        he_normal(layer->parameters()[0]->value, spec.in_channels * 9, rng);
        break;
      case LayerKind::kConv1x1:
        he_normal(layer->parameters()[0]->value, spec.in_channels, rng);
        for (auto& w : layer->parameters()[0]->value.values()) w *= static_cast<T>(kHeadInitScale);
        layer->parameters()[1]->value.fill(static_cast<T>(kHeadInitBias));
        break;
      case LayerKind::kDense:
        he_normal(layer->parameters()[0]->value, spec.in_channels, rng);
        break;
      case LayerKind::kConvTranspose3x3S2:
        // Each output pixel of a stride-2 3x3 transposed conv sees ~9/4 taps per channel.
        he_normal(layer->parameters()[0]->value, std::max<std::size_t>(1, spec.in_channels * 9 / 4), rng);
        break;
      default:
        break;
    }
    model.layers_.push_back(std::move(layer));
  }
  return model;
}

template <typename T>
Shape CnnrModel<T>::input_shape() const {
  return {1, info_.padded_rows, info_.nr_bins};
}

template <typename T>
std::vector<Shape> CnnrModel<T>::shape_trace() const {
  std::vector<Shape> trace{input_shape()};
  for (const auto& layer : layers_) trace.push_back(layer->output_shape(trace.back()));
  return trace;
}

template <typename T>
std::string CnnrModel<T>::shape_table() const {
  const auto trace = shape_trace();
  std::ostringstream os;
  os << "preset " << to_string(preset_) << ", " << parameter_count() << " parameters\n";
  os << "  in  " << shape_to_string(trace[0]) << '\n';
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    os << "  " << std::setw(2) << i << "  " << std::left << std::setw(28) << specs_[i].to_string()
       << std::right << shape_to_string(trace[i + 1]) << '\n';
  }
  return os.str();
}

template <typename T>
Tensor<T> CnnrModel<T>::forward(const Tensor<T>& batch, Mode mode) {
  const Shape expected = input_shape();
  if (batch.rank() != 4 || batch.dim(0) == 0 ||
      !std::equal(expected.begin(), expected.end(), batch.dims().begin() + 1)) {
    throw ShapeError("CnnrModel: expected N x " + shape_to_string(expected) + " input, got " +
                     shape_to_string(batch.dims()));
  }
  Tensor<T> x = layers_.front()->forward(batch, mode);
  for (std::size_t i = 1; i < layers_.size(); ++i) x = layers_[i]->forward(x, mode);
  return x;
}

template <typename T>
Tensor<T> CnnrModel<T>::backward(const Tensor<T>& grad_out) {
  Tensor<T> g = layers_.back()->backward(grad_out);
  for (std::size_t i = layers_.size() - 1; i-- > 0;) g = layers_[i]->backward(g);
  return g;
}

template <typename T>
std::vector<Parameter<T>*> CnnrModel<T>::parameters() {
  std::vector<Parameter<T>*> out;
  for (auto& layer : layers_) {
    for (Parameter<T>* p : layer->parameters()) out.push_back(p);
  }
  return out;
}

template <typename T>
std::size_t CnnrModel<T>::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers_) {
    for (Parameter<T>* p : layer->parameters()) count += p->value.size();
  }
  return count;
}

template <typename T>
void CnnrModel<T>::zero_grad() {
  for (Parameter<T>* p : parameters()) p->zero_grad();
}

template <typename T>
std::vector<StateEntry<T>> CnnrModel<T>::state() {
  std::vector<StateEntry<T>> entries;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    std::ostringstream prefix;
    prefix << std::setw(2) << std::setfill('0') << i << '.' << to_string(specs_[i].kind) << '.';
    for (Parameter<T>* p : layers_[i]->parameters()) entries.push_back({prefix.str() + p->name, &p->value});
    for (auto& [name, t] : layers_[i]->buffers()) entries.push_back({prefix.str() + name, t});
  }
  return entries;
}

template <typename T>
void CnnrModel<T>::recalibrate_batchnorm(const std::vector<Tensor<T>>& batches) {
  recalibrate_batchnorm_with([&] {
    for (const auto& b : batches) forward(b, Mode::kCalibrate);
  });
}

template <typename T>
void CnnrModel<T>::reseed_dropout(std::uint64_t seed) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (auto* d = dynamic_cast<Dropout<T>*>(layers_[i].get())) {
      d->reseed(child_seed(seed ^ kDropoutSeedSalt, i));
    }
  }
}

template <typename T>
void prepare_input(const Sinogram& sinogram, const PresetInfo& info, std::span<T> out) {
  if (sinogram.np_angles() != info.np_angles || sinogram.nr_bins() != info.nr_bins) {
    throw ShapeError("CNNR input: expected a " + std::to_string(info.np_angles) + "x" +
                     std::to_string(info.nr_bins) + " sinogram, got " +
                     std::to_string(sinogram.np_angles()) + "x" +
                     std::to_string(sinogram.nr_bins()));
  }
  if (out.size() != info.padded_rows * info.nr_bins) throw ShapeError("CNNR input: bad buffer");
  std::fill(out.begin(), out.end(), T{0});
  const double peak = sinogram.max();
  if (!(peak > 0.0)) return;
  const std::size_t top = (info.padded_rows - info.np_angles) / 2;
  for (std::size_t a = 0; a < info.np_angles; ++a) {
    for (std::size_t b = 0; b < info.nr_bins; ++b) {
      out[(top + a) * info.nr_bins + b] = static_cast<T>(sinogram.at(a, b) / peak);
    }
  }
}

template <typename T>
void prepare_target(const ActivityImage& image, std::span<T> out) {
  if (out.size() != image.size()) throw ShapeError("CNNR target: bad buffer");
  const double peak = image.max();
  const auto data = image.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = peak > 0.0 ? static_cast<T>(data[i] / peak) : T{0};
  }
}

ActivityImage calibrate_output(std::span<const double> raw, std::size_t n,
                               const Sinogram& sinogram, double pixel_size) {
  if (raw.size() != n * n) throw ShapeError("calibrate_output: bad raw size");
  std::vector<double> img(raw.begin(), raw.end());
  double total = 0.0;
  for (double& v : img) {
    v = v > 0.0 ? v : 0.0;
    total += v;
  }
  const double counts = sinogram.sum() / (static_cast<double>(sinogram.np_angles()) * pixel_size);
  const double scale = total > 0.0 ? counts / total : 0.0;
  for (double& v : img) v *= scale;
  return ActivityImage(n, std::move(img));
}

template <typename T>
std::vector<ActivityImage> cnnr_forward_batch(CnnrModel<T>& model,
                                              std::span<const Sinogram> sinograms,
                                              std::size_t batch_size) {
  const PresetInfo& info = model.info();
  const std::size_t in_size = info.padded_rows * info.nr_bins;
  const std::size_t out_size = info.image_n * info.image_n;
  std::vector<ActivityImage> images;
  images.reserve(sinograms.size());
  batch_size = std::max<std::size_t>(1, batch_size);
  for (std::size_t start = 0; start < sinograms.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, sinograms.size() - start);
    Tensor<T> batch({count, 1, info.padded_rows, info.nr_bins});
    for (std::size_t k = 0; k < count; ++k) {
      prepare_input<T>(sinograms[start + k], info, batch.values().subspan(k * in_size, in_size));
    }
    const Tensor<T> out = model.forward(batch, Mode::kInference);
    for (std::size_t k = 0; k < count; ++k) {
      std::vector<double> raw(out.data() + k * out_size, out.data() + (k + 1) * out_size);
      images.push_back(calibrate_output(raw, info.image_n, sinograms[start + k]));
    }
  }
  return images;
}

template <typename T>
ActivityImage cnnr_forward(CnnrModel<T>& model, const Sinogram& sinogram) {
  return std::move(cnnr_forward_batch(model, std::span(&sinogram, 1), 1).front());
}

#define SPECT_INSTANTIATE_CNNR(T)                                                           \
  template class CnnrModel<T>;                                                              \
  template void prepare_input<T>(const Sinogram&, const PresetInfo&, std::span<T>);         \
  template void prepare_target<T>(const ActivityImage&, std::span<T>);                      \
  template ActivityImage cnnr_forward<T>(CnnrModel<T>&, const Sinogram&);                   \
  template std::vector<ActivityImage> cnnr_forward_batch<T>(CnnrModel<T>&,                  \
                                                            std::span<const Sinogram>, std::size_t);

SPECT_INSTANTIATE_CNNR(float)
SPECT_INSTANTIATE_CNNR(double)

#undef SPECT_INSTANTIATE_CNNR

}  // namespace spect::nn
