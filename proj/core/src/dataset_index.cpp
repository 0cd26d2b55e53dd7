#include "spect/dataset_index.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "spect/array_io.hpp"
#include "spect/error.hpp"
#include "spect/rng.hpp"

namespace spect {

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t total, double train_fraction, std::uint64_t seed) {
  if (total == 0) throw std::invalid_argument("split_dataset: empty index");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split_dataset: train_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = total - 1; i > 0; --i) {
    const std::size_t j = rng.bounded(static_cast<std::uint32_t>(i + 1));
    std::swap(order[i], order[j]);
  }
  const auto n_train =
      static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(total)));
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<long>(n_train));
  std::vector<std::size_t> val(order.begin() + static_cast<long>(n_train), order.end());
  return {std::move(train), std::move(val)};
}

DatasetSplit split_dataset(const DatasetIndex& index, double train_fraction, std::uint64_t seed) {
  auto [train_idx, val_idx] = split_indices(index.pairs.size(), train_fraction, seed);
  DatasetSplit split;
  for (std::size_t i : train_idx) split.train.push_back(index.pairs[i]);
  for (std::size_t i : val_idx) split.validation.push_back(index.pairs[i]);
  return split;
}

std::string dataset_index_to_json(const DatasetIndex& index) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& p : index.pairs) {
    arr.push_back({{"sino", p.sino}, {"img", p.img}});
  }
  return arr.dump(1) + "\n";
}

DatasetIndex dataset_index_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (!j.is_array()) throw Error("dataset index must be a JSON array");
  DatasetIndex index;
  for (const auto& e : j) {
    index.pairs.push_back({e.at("sino").get<std::string>(), e.at("img").get<std::string>()});
  }
  return index;
}

void save_dataset_index(const std::string& path, const DatasetIndex& index) {
  const std::string text = dataset_index_to_json(index);
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

DatasetIndex load_dataset_index(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatError::Kind::kIo, "cannot open dataset index: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return dataset_index_from_json(ss.str());
}

}  // namespace spect
