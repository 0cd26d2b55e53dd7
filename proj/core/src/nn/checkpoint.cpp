#include "spect/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <limits>

#include "spect/array_io.hpp"
#include "spect/error.hpp"

namespace spect::nn {
namespace {

template <typename Int>
void put_le(std::vector<std::uint8_t>& out, Int v) {
  for (std::size_t i = 0; i < sizeof(Int); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  const std::uint8_t* take(std::size_t n) {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(FormatError::Kind::kTruncated, "checkpoint truncated");
    }
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  template <typename Int>
  Int read() {
    const std::uint8_t* p = take(sizeof(Int));
    Int v = 0;
    for (std::size_t i = 0; i < sizeof(Int); ++i) v |= static_cast<Int>(static_cast<Int>(p[i]) << (8 * i));
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

template <typename T>
std::vector<std::uint8_t> encode_checkpoint(CnnrModel<T>& model) {
  const auto entries = model.state();
  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  out.push_back(kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    const Shape& dims = e.tensor->dims();
    out.push_back(static_cast<std::uint8_t>(dims.size()));
    for (std::size_t d : dims) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (T v : e.tensor->values()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

template <typename T>
void decode_checkpoint(const std::vector<std::uint8_t>& bytes, CnnrModel<T>& model) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw FormatError(FormatError::Kind::kBadMagic, "not an SPCK checkpoint (bad magic)");
  }
  Reader in(bytes);
  in.take(4);
  const auto version = in.read<std::uint8_t>();
  if (version != kCheckpointVersion) {
    throw FormatError(FormatError::Kind::kVersion,
                      "unsupported checkpoint version " + std::to_string(version));
  }
  auto entries = model.state();
  const auto count = in.read<std::uint32_t>();
  if (count != entries.size()) {
    throw ShapeError("checkpoint has " + std::to_string(count) + " entries, model expects " +
                     std::to_string(entries.size()));
  }
  for (auto& e : entries) {
    const auto len = in.read<std::uint16_t>();
    const std::uint8_t* name = in.take(len);
    if (std::string(reinterpret_cast<const char*>(name), len) != e.name) {
      throw ShapeError("checkpoint entry '" + std::string(reinterpret_cast<const char*>(name), len) +
                       "' does not match model entry '" + e.name + "'");
    }
    const auto ndim = in.read<std::uint8_t>();
    Shape dims;
    for (std::size_t i = 0; i < ndim; ++i) dims.push_back(in.read<std::uint32_t>());
    if (dims != e.tensor->dims()) {
      throw ShapeError("checkpoint entry '" + e.name + "' has shape " + shape_to_string(dims) +
                       ", model expects " + shape_to_string(e.tensor->dims()));
    }
    for (T& v : e.tensor->values()) v = static_cast<T>(std::bit_cast<float>(in.read<std::uint32_t>()));
  }
  if (!in.done()) throw FormatError(FormatError::Kind::kTruncated, "trailing bytes in checkpoint");
}

template <typename T>
void save_checkpoint(const std::string& path, CnnrModel<T>& model) {
  write_file_atomic(path, encode_checkpoint(model));
}

template <typename T>
void load_checkpoint(const std::string& path, CnnrModel<T>& model) {
  decode_checkpoint(read_file(path), model);
}

#define SPECT_INSTANTIATE_CKPT(T)                                                  \
  template std::vector<std::uint8_t> encode_checkpoint<T>(CnnrModel<T>&);          \
  template void decode_checkpoint<T>(const std::vector<std::uint8_t>&, CnnrModel<T>&); \
  template void save_checkpoint<T>(const std::string&, CnnrModel<T>&);             \
  template void load_checkpoint<T>(const std::string&, CnnrModel<T>&);

SPECT_INSTANTIATE_CKPT(float)
SPECT_INSTANTIATE_CKPT(double)

#undef SPECT_INSTANTIATE_CKPT

}  // namespace spect::nn
