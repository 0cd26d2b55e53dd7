#include "spect/pipeline/png_writer.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "spect/error.hpp"

namespace spect::pipeline {

void write_png_gray8(const std::filesystem::path& path, std::span<const std::uint8_t> pixels,
                     std::size_t width, std::size_t height) {
  if (pixels.size() != width * height || width == 0 || height == 0) {
    throw ShapeError("write_png_gray8: pixel buffer does not match dimensions");
  }
  const std::string tmp = path.string() + ".tmp";
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(tmp.c_str(), "wb"), &std::fclose);
  if (!file) throw FormatError(FormatError::Kind::kIo, "cannot open for writing: " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw FormatError(FormatError::Kind::kIo, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError(FormatError::Kind::kIo, "PNG encoding failed: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t r = 0; r < height; ++r) {
    png_write_row(png, const_cast<png_bytep>(pixels.data() + r * width));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  file.reset();
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw FormatError(FormatError::Kind::kIo, "cannot rename into place: " + path.string());
}

Montage build_montage(std::span<const ActivityImage> images) {
  if (images.empty()) throw std::invalid_argument("build_montage: no images");
  const std::size_t n = images.front().n();
  for (const auto& img : images) {
    if (img.n() != n) throw ShapeError("build_montage: images differ in size");
  }
  const auto ref = images.front().data();
  const auto [lo, hi] = std::minmax_element(ref.begin(), ref.end());
  Montage m;
  m.low = *lo;
  m.high = *hi;
  m.width = n * images.size();
  m.height = n;
  m.pixels.assign(m.width * m.height, 0);
  const double range = m.high > m.low ? m.high - m.low : 1.0;
  for (std::size_t k = 0; k < images.size(); ++k) {
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        const double v = std::clamp((images[k].at(r, c) - m.low) / range, 0.0, 1.0);
        m.pixels[r * m.width + k * n + c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  return m;
}

}  // namespace spect::pipeline
