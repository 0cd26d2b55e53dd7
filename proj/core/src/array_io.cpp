#include "spect/array_io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "spect/error.hpp"

namespace spect {
namespace {

static_assert(std::numeric_limits<float>::is_iec559, "f32 payload requires IEEE-754 floats");

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::vector<std::uint8_t> encode_array(std::span<const std::size_t> dims,
                                       std::span<const float> values) {
  if (dims.size() > 255) {
    throw FormatError(FormatError::Kind::kOverflow, "SPCT supports at most 255 dimensions");
  }
  std::size_t count = 1;
  for (std::size_t d : dims) {
    if (d > std::numeric_limits<std::uint32_t>::max()) {
      throw FormatError(FormatError::Kind::kOverflow, "SPCT extent exceeds 32 bits");
    }
    count *= d;
  }
  if (count != values.size()) {
    throw std::invalid_argument("save_array: product of extents (" + std::to_string(count) +
                                ") does not match data length (" +
                                std::to_string(values.size()) + ")");
  }

  std::vector<std::uint8_t> out;
  out.reserve(6 + 4 * dims.size() + 4 * values.size());
  out.insert(out.end(), std::begin(kArrayMagic), std::end(kArrayMagic));
  out.push_back(kArrayVersion);
  out.push_back(static_cast<std::uint8_t>(dims.size()));
  for (std::size_t d : dims) put_u32(out, static_cast<std::uint32_t>(d));
  for (float v : values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

ArrayData decode_array(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kArrayMagic, 4) != 0) {
    throw FormatError(FormatError::Kind::kBadMagic, "not an SPCT file (bad magic)");
  }
  if (bytes.size() < 6) throw FormatError(FormatError::Kind::kTruncated, "SPCT header truncated");
  if (bytes[4] != kArrayVersion) {
    throw FormatError(FormatError::Kind::kVersion,
                      "unsupported SPCT version " + std::to_string(bytes[4]));
  }
  const std::size_t ndim = bytes[5];
  std::size_t offset = 6;
  if (bytes.size() < offset + 4 * ndim) {
    throw FormatError(FormatError::Kind::kTruncated, "SPCT extents truncated");
  }
  ArrayData result;
  std::size_t count = 1;
  for (std::size_t i = 0; i < ndim; ++i, offset += 4) {
    result.dims.push_back(get_u32(bytes.data() + offset));
    count *= result.dims.back();
  }
  if ((bytes.size() - offset) / 4 < count || bytes.size() - offset != 4 * count) {
    throw FormatError(FormatError::Kind::kTruncated,
                      "SPCT payload size does not match extents");
  }
  result.values.resize(count);
  for (std::size_t i = 0; i < count; ++i, offset += 4) {
    result.values[i] = std::bit_cast<float>(get_u32(bytes.data() + offset));
  }
  return result;
}

void write_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatError::Kind::kIo, "cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError(FormatError::Kind::kIo, "write failed: " + path);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw FormatError(FormatError::Kind::kIo, "cannot rename into place: " + path);
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::kIo, "cannot open: " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void save_array(const std::string& path, std::span<const std::size_t> dims,
                std::span<const float> values) {
  write_file_atomic(path, encode_array(dims, values));
}

ArrayData load_array(const std::string& path) { return decode_array(read_file(path)); }

}  // namespace spect
