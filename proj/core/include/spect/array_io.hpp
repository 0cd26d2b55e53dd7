#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace spect {

/// On-disk array layout:
///   "SPCT" | u8 version | u8 ndim | ndim x u32 LE extents | f32 LE payload
/// Row-major, last index fastest, no padding.
inline constexpr char kArrayMagic[4] = {'S', 'P', 'C', 'T'};
inline constexpr std::uint8_t kArrayVersion = 1;

struct ArrayData {
  std::vector<std::size_t> dims;
  std::vector<float> values;
};

/// Throws std::invalid_argument if product(dims) != values.size(),
/// FormatError(kOverflow) for extents beyond u32 or more than 255 dims,
/// FormatError(kIo) if the file cannot be written.
void save_array(const std::string& path, std::span<const std::size_t> dims,
                std::span<const float> values);

/// Throws FormatError with kBadMagic / kVersion / kTruncated / kIo.
ArrayData load_array(const std::string& path);

/// In-memory encode/decode used by save_array/load_array.
std::vector<std::uint8_t> encode_array(std::span<const std::size_t> dims,
                                       std::span<const float> values);
ArrayData decode_array(std::span<const std::uint8_t> bytes);

/// Writes bytes to `path` through a temporary file and rename, so readers
/// never observe a half-written file.
void write_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::string& path);

}  // namespace spect
