#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace spect {

struct DatasetPair {
  std::string sino;
  std::string img;

  friend bool operator==(const DatasetPair&, const DatasetPair&) = default;
};

/// Ordered (sinogram, image) file pairs. Persisted as a JSON array of
/// {"sino": path, "img": path} objects.
struct DatasetIndex {
  std::vector<DatasetPair> pairs;
  std::uint64_t split_seed = 0;
  double train_fraction = 0.9;
};

struct DatasetSplit {
  std::vector<DatasetPair> train;
  std::vector<DatasetPair> validation;
};

/// Seeded Fisher-Yates shuffle, then the first round(train_fraction * total)
/// entries go to training. Throws std::invalid_argument on an empty index or
/// a fraction outside (0, 1).
DatasetSplit split_dataset(const DatasetIndex& index, double train_fraction, std::uint64_t seed);

/// Index-level variant used by the trainer: returns positions, not pairs.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t total, double train_fraction, std::uint64_t seed);

std::string dataset_index_to_json(const DatasetIndex& index);
DatasetIndex dataset_index_from_json(const std::string& text);
void save_dataset_index(const std::string& path, const DatasetIndex& index);
DatasetIndex load_dataset_index(const std::string& path);

}  // namespace spect
