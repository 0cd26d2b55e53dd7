#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spect/nn/cnnr.hpp"

namespace spect::nn {

/// Checkpoint layout:
///   "SPCK" | u8 version | u32 LE entry count |
///   per entry: u16 LE name length, UTF-8 name, u8 ndim, ndim x u32 LE, f32 LE payload
/// Entries follow CnnrModel::state() order.
inline constexpr char kCheckpointMagic[4] = {'S', 'P', 'C', 'K'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

template <typename T>
std::vector<std::uint8_t> encode_checkpoint(CnnrModel<T>& model);

/// Loads entries into `model`; names and shapes must match exactly.
template <typename T>
void decode_checkpoint(const std::vector<std::uint8_t>& bytes, CnnrModel<T>& model);

template <typename T>
void save_checkpoint(const std::string& path, CnnrModel<T>& model);
template <typename T>
void load_checkpoint(const std::string& path, CnnrModel<T>& model);

}  // namespace spect::nn
