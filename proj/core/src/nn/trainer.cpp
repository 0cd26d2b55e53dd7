#include "spect/nn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "spect/dataset_index.hpp"
#include "spect/error.hpp"
#include "spect/metrics.hpp"
#include "spect/nn/ssim_loss.hpp"
#include "spect/rng.hpp"

namespace spect::nn {
namespace {

constexpr std::uint64_t kShuffleSalt = 0x5a5f0ff1ceULL;

template <typename T>
struct PreparedSet {
  std::size_t count = 0;
  std::size_t in_size = 0;
  std::size_t out_size = 0;
  std::vector<T> inputs;
  std::vector<T> targets;
};

SsimConfig window_config(std::size_t window) {
  SsimConfig cfg;
  cfg.window = window == 0 ? SsimWindow::kGlobal : SsimWindow::kUniform;
  if (window != 0) cfg.window_size = window;
  return cfg;
}

template <typename T>
PreparedSet<T> prepare_set(std::span<const TrainingSample> samples, const PresetInfo& info) {
  PreparedSet<T> set;
  set.count = samples.size();
  set.in_size = info.padded_rows * info.nr_bins;
  set.out_size = info.image_n * info.image_n;
  set.inputs.resize(set.count * set.in_size);
  set.targets.resize(set.count * set.out_size);
  for (std::size_t i = 0; i < set.count; ++i) {
    if (samples[i].image.n() != info.image_n) {
      throw ShapeError("training sample " + std::to_string(i) + ": image is " +
                       std::to_string(samples[i].image.n()) + " pixels wide, preset expects " +
                       std::to_string(info.image_n));
    }
    prepare_input<T>(samples[i].sinogram, info,
                     std::span(set.inputs).subspan(i * set.in_size, set.in_size));
    prepare_target<T>(samples[i].image, std::span(set.targets).subspan(i * set.out_size, set.out_size));
  }
  return set;
}

template <typename T>
void gather_batch(const PreparedSet<T>& set, const PresetInfo& info,
                  std::span<const std::size_t> idx, Tensor<T>& x, Tensor<T>& y) {
  x = Tensor<T>({idx.size(), 1, info.padded_rows, info.nr_bins});
  y = Tensor<T>({idx.size(), 1, info.image_n, info.image_n});
  for (std::size_t k = 0; k < idx.size(); ++k) {
    std::copy_n(set.inputs.data() + idx[k] * set.in_size, set.in_size, x.data() + k * set.in_size);
    std::copy_n(set.targets.data() + idx[k] * set.out_size, set.out_size, y.data() + k * set.out_size);
  }
}

/// Batch boundaries; a trailing single-sample batch is dropped unless it is the only one.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t total, std::size_t batch) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t start = 0; start < total; start += batch) {
    const std::size_t count = std::min(batch, total - start);
    if (count == 1 && !ranges.empty()) break;
    ranges.emplace_back(start, count);
  }
  return ranges;
}

template <typename T>
double evaluate_prepared(CnnrModel<T>& model, const PreparedSet<T>& set, std::size_t window,
                         std::size_t batch_size) {
  if (set.count == 0) return std::numeric_limits<double>::quiet_NaN();
  const PresetInfo& info = model.info();
  const std::size_t n = info.image_n;
  SsimConfig cfg = window_config(window);
  std::vector<std::size_t> idx(set.count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  double total = 0.0;
  Tensor<T> x, y;
  std::vector<double> pred(set.out_size), ref(set.out_size);
  for (std::size_t start = 0; start < set.count; start += batch_size) {
    const std::size_t count = std::min(batch_size, set.count - start);
    gather_batch(set, info, std::span(idx).subspan(start, count), x, y);
    const Tensor<T> out = model.forward(x, Mode::kInference);
    for (std::size_t k = 0; k < count; ++k) {
      for (std::size_t i = 0; i < set.out_size; ++i) {
        pred[i] = std::max(0.0, static_cast<double>(out[k * set.out_size + i]));
        ref[i] = y[k * set.out_size + i];
      }
      const auto [lo, hi] = std::minmax_element(ref.begin(), ref.end());
      cfg.dynamic_range = std::max(*hi - *lo, kMinDynamicRange);
      total += ssim(ImageView{pred, n, n}, ImageView{ref, n, n}, cfg);
    }
  }
  return total / static_cast<double>(set.count);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("train: epochs must be >= 1");
  if (batch_size == 0) throw std::invalid_argument("train: batch size must be >= 1");
  if (!(adam.learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be > 0");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train: train fraction must lie in (0, 1)");
  }
  if (ssim_window == 1) {
    throw std::invalid_argument("train: SSIM window must be 0 (global) or >= 2");
  }
}

std::string TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["preset"] = to_string(preset);
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["learning_rate"] = adam.learning_rate;
  j["beta1"] = adam.beta1;
  j["beta2"] = adam.beta2;
  j["epsilon"] = adam.epsilon;
  j["train_fraction"] = train_fraction;
  j["seed"] = seed;
  j["ssim_window"] = ssim_window;
  j["restore_best"] = restore_best;
  j["recalibrate_batchnorm"] = recalibrate_batchnorm;
  j["optimizer"] = "adam";
  j["loss"] = ssim_window == 0 ? "1 - ssim(output, target), global"
                               : "1 - ssim(output, target), uniform window";
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  TrainConfig c;
  c.preset = parse_preset(j.value("preset", to_string(c.preset)));
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
  c.adam.beta1 = j.value("beta1", c.adam.beta1);
  c.adam.beta2 = j.value("beta2", c.adam.beta2);
  c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
  c.train_fraction = j.value("train_fraction", c.train_fraction);
  c.seed = j.value("seed", c.seed);
  c.ssim_window = j.value("ssim_window", c.ssim_window);
  c.restore_best = j.value("restore_best", c.restore_best);
  c.recalibrate_batchnorm = j.value("recalibrate_batchnorm", c.recalibrate_batchnorm);
  c.validate();
  return c;
}

std::string TrainHistory::to_json() const {
  nlohmann::ordered_json j;
  j["initial_loss"] = initial_loss;
  j["best_epoch"] = best_epoch;
  j["best_validation_ssim"] = best_validation_ssim;
  j["epochs"] = nlohmann::ordered_json::array();
  for (const auto& e : epochs) {
    j["epochs"].push_back(
        {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"validation_ssim", e.validation_ssim}});
  }
  return j.dump(2);
}

template <typename T>
TrainHistory train(CnnrModel<T>& model, std::span<const TrainingSample> train_set,
                   std::span<const TrainingSample> validation_set, const TrainConfig& config,
                   const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty dataset");
  if (model.preset() != config.preset) {
    throw std::invalid_argument("train: model preset " + to_string(model.preset()) +
                                " does not match config preset " + to_string(config.preset));
  }
  const PresetInfo& info = model.info();
  const PreparedSet<T> train_data = prepare_set<T>(train_set, info);
  const PreparedSet<T> val_data = prepare_set<T>(validation_set, info);

  const SsimConfig loss_cfg = window_config(config.ssim_window);

  model.reseed_dropout(config.seed);
  Adam<T> optimizer(config.adam);
  const auto params = model.parameters();
  const auto ranges = batch_ranges(train_data.count, config.batch_size);

  std::vector<std::size_t> order(train_data.count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Tensor<T> x, y;

  TrainHistory history;
  {
    double total = 0.0;
    for (const auto& [start, count] : ranges) {
      gather_batch(train_data, info, std::span(order).subspan(start, count), x, y);
      total += ssim_loss(model.forward(x, Mode::kTrain), y, loss_cfg).loss;
    }
    history.initial_loss = total / static_cast<double>(ranges.size());
  }

  std::vector<Tensor<T>> best_state;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(child_seed(config.seed ^ kShuffleSalt, epoch));
    for (std::size_t i = order.size(); i-- > 1;) {
      std::swap(order[i], order[rng.bounded(static_cast<std::uint32_t>(i + 1))]);
    }
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < ranges.size(); ++b) {
      const auto [start, count] = ranges[b];
      gather_batch(train_data, info, std::span(order).subspan(start, count), x, y);
      model.zero_grad();
      const Tensor<T> pred = model.forward(x, Mode::kTrain);
      const LossResult<T> loss = ssim_loss(pred, y, loss_cfg);
      if (!std::isfinite(loss.loss)) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(b));
      }
      model.backward(loss.grad);
      try {
        optimizer.step(params);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(b) + ")");
      }
      epoch_loss += loss.loss;
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = epoch_loss / static_cast<double>(ranges.size());
    record.validation_ssim = val_data.count > 0
                                 ? evaluate_prepared(model, val_data, config.ssim_window, 16)
                                 : 1.0 - record.train_loss;
    history.epochs.push_back(record);
    if (record.validation_ssim > best) {
      best = record.validation_ssim;
      history.best_epoch = epoch;
      history.best_validation_ssim = best;
      if (config.restore_best) {
        best_state.clear();
        for (const auto& e : model.state()) best_state.push_back(*e.tensor);
      }
    }
    if (on_epoch) on_epoch(record);
  }
  if (config.restore_best && !best_state.empty()) {
    auto entries = model.state();
    for (std::size_t k = 0; k < entries.size(); ++k) *entries[k].tensor = std::move(best_state[k]);
  }
  if (config.recalibrate_batchnorm) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    model.recalibrate_batchnorm_with([&] {
      for (const auto& [start, count] : ranges) {
        gather_batch(train_data, info, std::span(order).subspan(start, count), x, y);
        model.forward(x, Mode::kCalibrate);
      }
    });
  }
  return history;
}

template <typename T>
TrainHistory train(CnnrModel<T>& model, std::span<const TrainingSample> dataset,
                   const TrainConfig& config, const EpochCallback& on_epoch) {
  auto [train_idx, val_idx] = split_indices(dataset.size(), config.train_fraction, config.seed);
  std::vector<TrainingSample> train_set, val_set;
  for (std::size_t i : train_idx) train_set.push_back(dataset[i]);
  for (std::size_t i : val_idx) val_set.push_back(dataset[i]);
  return train(model, std::span<const TrainingSample>(train_set),
               std::span<const TrainingSample>(val_set), config, on_epoch);
}

template <typename T>
double evaluate_ssim(CnnrModel<T>& model, std::span<const TrainingSample> samples,
                     std::size_t ssim_window, std::size_t batch_size) {
  return evaluate_prepared(model, prepare_set<T>(samples, model.info()), ssim_window,
                           std::max<std::size_t>(1, batch_size));
}

#define SPECT_INSTANTIATE_TRAIN(T)                                                            \
  template TrainHistory train<T>(CnnrModel<T>&, std::span<const TrainingSample>,              \
                                 std::span<const TrainingSample>, const TrainConfig&,         \
                                 const EpochCallback&);                                       \
  template TrainHistory train<T>(CnnrModel<T>&, std::span<const TrainingSample>,              \
                                 const TrainConfig&, const EpochCallback&);                   \
  template double evaluate_ssim<T>(CnnrModel<T>&, std::span<const TrainingSample>, std::size_t, \
                                   std::size_t);

SPECT_INSTANTIATE_TRAIN(float)
SPECT_INSTANTIATE_TRAIN(double)

#undef SPECT_INSTANTIATE_TRAIN

}  // namespace spect::nn
