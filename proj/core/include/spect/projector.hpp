#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spect/images.hpp"

namespace spect {

/// Parallel-beam acquisition geometry.
///
/// The image grid spans [-n/2, n/2] * pixel_size on both axes, centred on the
/// rotation axis. Angle k is arc_degrees * k / np_angles. For angle theta the
/// ray of bin b is the line { p : p . (cos theta, sin theta) = s_b } with
/// s_b = (b + 0.5 - nr_bins / 2) * pixel_size.
struct ScanGeometry {
  std::size_t n = 128;
  std::size_t np_angles = 24;
  std::size_t nr_bins = 128;
  double arc_degrees = 360.0;
  double pixel_size = 1.0;

  std::size_t num_rows() const noexcept { return np_angles * nr_bins; }
  std::size_t num_pixels() const noexcept { return n * n; }
  double angle_radians(std::size_t k) const noexcept;
  double bin_offset(std::size_t b) const noexcept;
  /// Throws std::invalid_argument when any count is zero or sizes are non-positive.
  void validate() const;

  friend bool operator==(const ScanGeometry&, const ScanGeometry&) = default;
};

/// Parses "n=128,angles=24,bins=128,arc=360[,pixel=1]". Missing keys keep
/// their defaults except `bins`, which defaults to `n`.
ScanGeometry parse_geometry(const std::string& text);
std::string format_geometry(const ScanGeometry& g);

struct MatrixEntry {
  std::uint32_t col;
  double weight;
};

/// Sparse nonnegative operator from image space to sinogram space, stored
/// CSR with a CSC mirror so both projections are deterministic gathers.
class SystemMatrix {
 public:
  SystemMatrix() = default;

  /// Generic matrix from per-row entries. Entries are sorted by column and
  /// duplicates merged; negative weights or out-of-range columns throw.
  static SystemMatrix from_rows(std::size_t num_cols,
                                std::vector<std::vector<MatrixEntry>> rows);

  std::size_t num_rows() const noexcept { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
  std::size_t num_cols() const noexcept { return num_cols_; }
  std::size_t nnz() const noexcept { return cols_.size(); }

  std::span<const std::uint32_t> row_cols(std::size_t row) const noexcept;
  std::span<const double> row_weights(std::size_t row) const noexcept;

  /// y = P f.
  void apply(std::span<const double> image, std::span<double> out) const;
  /// x = P^T y.
  void apply_adjoint(std::span<const double> sinogram, std::span<double> out) const;
  /// s_j = sum_i P_ij.
  std::vector<double> column_sums() const;

  bool has_geometry() const noexcept { return has_geometry_; }
  const ScanGeometry& geometry() const noexcept { return geometry_; }

 private:
  friend SystemMatrix build_system_matrix(const ScanGeometry& geometry);
  void build_transpose();

  std::size_t num_cols_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> cols_;
  std::vector<double> weights_;
  std::vector<std::size_t> col_ptr_;
  std::vector<std::uint32_t> t_rows_;
  std::vector<double> t_weights_;
  ScanGeometry geometry_{};
  bool has_geometry_ = false;
};

/// Intersection lengths of one ray with every pixel it crosses (Siddon).
/// Returned entries are sorted by pixel index with positive weights.
std::vector<MatrixEntry> trace_ray(const ScanGeometry& geometry, std::size_t angle,
                                   std::size_t bin);

/// Builds P_ij = length of ray i inside pixel j for every (angle, bin).
SystemMatrix build_system_matrix(const ScanGeometry& geometry);

/// Y_i = sum_j P_ij F_j. Throws ShapeError when image.n() != geometry.n.
Sinogram forward_project(const SystemMatrix& matrix, const ActivityImage& image);

/// (P^T y)_j, returned row-major with n*n entries.
std::vector<double> back_project(const SystemMatrix& matrix, const Sinogram& sinogram);

}  // namespace spect
