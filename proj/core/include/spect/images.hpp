#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace spect {

/// Nonnegative n x n emission map, row-major. Row 0 is the top of the
/// field of view (largest y).
class ActivityImage {
 public:
  ActivityImage() = default;
  /// Zero image; n >= 2 except for toy systems built in tests (n >= 1).
  explicit ActivityImage(std::size_t n);
  /// Throws std::invalid_argument on wrong length or negative/non-finite values.
  ActivityImage(std::size_t n, std::vector<double> data);

  std::size_t n() const noexcept { return n_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> mutable_data() noexcept { return data_; }
  double at(std::size_t row, std::size_t col) const { return data_[row * n_ + col]; }
  double& at(std::size_t row, std::size_t col) { return data_[row * n_ + col]; }
  double max() const noexcept;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Nonnegative projection data, row-major: one row per angle, one column per bin.
class Sinogram {
 public:
  Sinogram() = default;
  Sinogram(std::size_t np_angles, std::size_t nr_bins);
  Sinogram(std::size_t np_angles, std::size_t nr_bins, std::vector<double> data);

  std::size_t np_angles() const noexcept { return np_; }
  std::size_t nr_bins() const noexcept { return nr_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> mutable_data() noexcept { return data_; }
  double at(std::size_t angle, std::size_t bin) const { return data_[angle * nr_ + bin]; }
  double max() const noexcept;
  double sum() const noexcept;

 private:
  std::size_t np_ = 0;
  std::size_t nr_ = 0;
  std::vector<double> data_;
};

/// SPCT persistence for the two domain arrays (f32 on disk).
void save_image(const std::string& path, const ActivityImage& image);
ActivityImage load_image(const std::string& path);
void save_sinogram(const std::string& path, const Sinogram& sinogram);
Sinogram load_sinogram(const std::string& path);

}  // namespace spect
