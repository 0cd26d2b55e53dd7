#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spect/images.hpp"

namespace spect::pipeline {

/// 8-bit grayscale, non-interlaced PNG.
void write_png_gray8(const std::filesystem::path& path, std::span<const std::uint8_t> pixels,
                     std::size_t width, std::size_t height);

struct Montage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;
  double low = 0.0;   // value mapped to 0
  double high = 0.0;  // value mapped to 255
};

/// Tiles images left to right, all mapped with the first image's min/max range.
Montage build_montage(std::span<const ActivityImage> images);

}  // namespace spect::pipeline
