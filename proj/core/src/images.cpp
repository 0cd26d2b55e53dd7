#include "spect/images.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "spect/array_io.hpp"
#include "spect/error.hpp"

namespace spect {
namespace {

void check_nonnegative(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string(what) + " values must be finite and >= 0");
    }
  }
}

std::vector<float> to_f32(std::span<const double> values) {
  return {values.begin(), values.end()};
}

}  // namespace

ActivityImage::ActivityImage(std::size_t n) : n_(n), data_(n * n, 0.0) {
  if (n == 0) throw std::invalid_argument("ActivityImage: n must be positive");
}

ActivityImage::ActivityImage(std::size_t n, std::vector<double> data)
    : n_(n), data_(std::move(data)) {
  if (n == 0) throw std::invalid_argument("ActivityImage: n must be positive");
  if (data_.size() != n * n) throw ShapeError("ActivityImage: data length must equal n*n");
  check_nonnegative(data_, "ActivityImage");
}

double ActivityImage::max() const noexcept {
  return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
}

Sinogram::Sinogram(std::size_t np_angles, std::size_t nr_bins)
    : np_(np_angles), nr_(nr_bins), data_(np_angles * nr_bins, 0.0) {}

Sinogram::Sinogram(std::size_t np_angles, std::size_t nr_bins, std::vector<double> data)
    : np_(np_angles), nr_(nr_bins), data_(std::move(data)) {
  if (data_.size() != np_ * nr_) throw ShapeError("Sinogram: data length must equal np*nr");
  check_nonnegative(data_, "Sinogram");
}

double Sinogram::max() const noexcept {
  return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
}

double Sinogram::sum() const noexcept { return std::accumulate(data_.begin(), data_.end(), 0.0); }

void save_image(const std::string& path, const ActivityImage& image) {
  const std::size_t dims[] = {image.n(), image.n()};
  save_array(path, dims, to_f32(image.data()));
}

ActivityImage load_image(const std::string& path) {
  ArrayData a = load_array(path);
  if (a.dims.size() != 2 || a.dims[0] != a.dims[1]) {
    throw ShapeError(path + ": expected a square 2-D image");
  }
  return ActivityImage(a.dims[0], std::vector<double>(a.values.begin(), a.values.end()));
}

void save_sinogram(const std::string& path, const Sinogram& sinogram) {
  const std::size_t dims[] = {sinogram.np_angles(), sinogram.nr_bins()};
  save_array(path, dims, to_f32(sinogram.data()));
}

Sinogram load_sinogram(const std::string& path) {
  ArrayData a = load_array(path);
  if (a.dims.size() != 2) throw ShapeError(path + ": expected a 2-D sinogram");
  return Sinogram(a.dims[0], a.dims[1], std::vector<double>(a.values.begin(), a.values.end()));
}

}  // namespace spect
