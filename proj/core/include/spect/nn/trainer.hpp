#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spect/images.hpp"
#include "spect/nn/adam.hpp"
#include "spect/nn/cnnr.hpp"

namespace spect::nn {

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  AdamConfig adam{};
  double train_fraction = 0.9;
  std::uint64_t seed = 0;
  ScalePreset preset = ScalePreset::kDesk64;
  /// Side of the uniform SSIM window of the loss; 0 uses whole-image statistics.
  std::size_t ssim_window = 0;
  /// Reload the best-validation parameters when training ends.
  bool restore_best = true;
  /// Recompute batchnorm statistics over the training set after the last epoch.
  bool recalibrate_batchnorm = true;

  void validate() const;
  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);
};

struct TrainingSample {
  Sinogram sinogram;
  ActivityImage image;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_ssim = 0.0;
};

struct TrainHistory {
  /// Mean training-mode loss over the training batches before any update.
  double initial_loss = 0.0;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_validation_ssim = 0.0;

  std::string to_json() const;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam on 1 - SSIM(output, target) with the raw linear output;
/// the zero clamp is applied at inference only. Batches are reshuffled
/// every epoch from a child seed of config.seed; a trailing batch of one
/// sample is skipped because batch statistics are undefined for it. Validation SSIM is
/// measured in inference mode against unit-max targets. Throws
/// NumericError (with epoch and batch) on a non-finite loss.
template <typename T>
TrainHistory train(CnnrModel<T>& model, std::span<const TrainingSample> train_set,
                   std::span<const TrainingSample> validation_set, const TrainConfig& config,
                   const EpochCallback& on_epoch = {});

/// Splits `dataset` with split_dataset(config.train_fraction, config.seed) first.
template <typename T>
TrainHistory train(CnnrModel<T>& model, std::span<const TrainingSample> dataset,
                   const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Mean inference-mode SSIM against unit-max targets (window 0 = global).
template <typename T>
double evaluate_ssim(CnnrModel<T>& model, std::span<const TrainingSample> samples,
                     std::size_t ssim_window = 8, std::size_t batch_size = 16);

}  // namespace spect::nn
