#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "spect/images.hpp"
#include "spect/metrics.hpp"
#include "spect/nn/cnnr.hpp"
#include "spect/nn/trainer.hpp"
#include "spect/phantoms.hpp"
#include "spect/projector.hpp"

namespace spect::pipeline {

namespace fs = std::filesystem;

/// Runs `fn(i)` for i in [0, count) on up to `jobs` threads. Exceptions are
/// rethrown (the one from the lowest index wins).
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------- dataset

/// Counts at or above this need --confirm-large.
inline constexpr std::size_t kLargeDatasetCount = 100000;

struct DatasetConfig {
  std::size_t count = 0;
  ScanGeometry geometry{};
  double counts_scale = 0.0;
  std::uint64_t seed = 0;
  RandomPhantomConfig phantom{};
  std::size_t jobs = 1;
  bool confirm_large = false;

  void validate() const;
  nlohmann::ordered_json to_json() const;
};

struct DatasetSample {
  PhantomRecipe recipe;
  ActivityImage phantom;
  Sinogram noiseless;
  Sinogram noisy;
};

/// Sample `index` of a dataset; depends only on (config, index).
DatasetSample generate_sample(const SystemMatrix& matrix, const DatasetConfig& config,
                              std::size_t index);

/// File names of sample `index` inside a dataset directory.
struct SampleFiles {
  std::string phantom, noiseless, noisy;
};
SampleFiles sample_files(std::size_t index);

/// Rough on-disk size of a dataset in bytes.
std::uint64_t estimate_dataset_bytes(const DatasetConfig& config);

struct DatasetResult {
  std::size_t generated = 0;
  std::size_t skipped = 0;
};

/// Writes (phantom, noiseless sinogram, noisy sinogram) per sample, then
/// index.json and manifest.json. Complete, loadable triples already present
/// are kept; anything partial is regenerated.
DatasetResult cmd_dataset(const fs::path& out_dir, const DatasetConfig& config, std::ostream& log);

/// Loads a dataset index (paths relative to the index file) into memory.
std::vector<nn::TrainingSample> load_training_samples(const fs::path& index_path);

// ---------------------------------------------------------- reconstruction

struct MlemOptions {
  ScanGeometry geometry{};
  std::size_t iterations = 50;
  /// Uniform start value; data-scaled sum(y)/sum(s) when empty.
  std::optional<double> init;
  std::size_t jobs = 1;
};

/// One image and one metadata JSON per input, in input order.
std::vector<fs::path> cmd_mlem(const std::vector<fs::path>& inputs, const fs::path& out_dir,
                               const MlemOptions& options);

struct InferOptions {
  fs::path checkpoint;
  /// Taken from the checkpoint sidecar JSON when empty.
  std::optional<nn::ScalePreset> preset;
};

std::vector<fs::path> cmd_infer(const std::vector<fs::path>& inputs, const fs::path& out_dir,
                                const InferOptions& options);

// ------------------------------------------------------------------ train

struct TrainOutputs {
  fs::path checkpoint;
  fs::path config;
  fs::path history;
};

/// Trains on the index, writes the checkpoint, its JSON sidecar and the history.
TrainOutputs cmd_train(const fs::path& index_path, const fs::path& checkpoint_path,
                       const nn::TrainConfig& config, std::ostream& log);

/// Sidecar next to a checkpoint: "<checkpoint>.json".
fs::path checkpoint_sidecar(const fs::path& checkpoint);

// ------------------------------------------------------- single-step tools

std::vector<fs::path> cmd_phantom(const fs::path& out_dir, std::size_t n, std::size_t count,
                                  std::uint64_t seed,
                                  const std::optional<SheppLoganVariant>& variant);
std::vector<fs::path> cmd_project(const std::vector<fs::path>& inputs, const fs::path& out_dir,
                                  const ScanGeometry& geometry);
std::vector<fs::path> cmd_noise(const std::vector<fs::path>& inputs, const fs::path& out_dir,
                                double counts_scale, std::uint64_t seed);

// ------------------------------------------------------------- evaluation

MetricsReport cmd_eval(const fs::path& reference, const fs::path& test, const SsimConfig& config,
                       const std::string& label = "test");

struct CompareResult {
  nlohmann::ordered_json report;
  std::size_t montage_width = 0;
  std::size_t montage_height = 0;
};

/// Metrics for every (label, path) against the truth, a JSON report, and a
/// montage PNG of truth | method 1 | method 2 ... when `out_png` is non-empty.
CompareResult cmd_compare(const fs::path& truth,
                          const std::vector<std::pair<std::string, fs::path>>& methods,
                          const SsimConfig& config, const fs::path& out_json,
                          const fs::path& out_png);

}  // namespace spect::pipeline
