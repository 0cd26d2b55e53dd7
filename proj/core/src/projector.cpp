#include "spect/projector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "spect/error.hpp"

namespace spect {

double ScanGeometry::angle_radians(std::size_t k) const noexcept {
  return arc_degrees * static_cast<double>(k) / static_cast<double>(np_angles) *
         std::numbers::pi / 180.0;
}

double ScanGeometry::bin_offset(std::size_t b) const noexcept {
  return (static_cast<double>(b) + 0.5 - static_cast<double>(nr_bins) / 2.0) * pixel_size;
}

void ScanGeometry::validate() const {
  if (n == 0 || np_angles == 0 || nr_bins == 0) {
    throw std::invalid_argument("geometry: n, angles and bins must be >= 1");
  }
  if (!(pixel_size > 0.0) || !(arc_degrees > 0.0)) {
    throw std::invalid_argument("geometry: pixel size and arc must be positive");
  }
  if (n > 65535) throw std::invalid_argument("geometry: n too large");
}

ScanGeometry parse_geometry(const std::string& text) {
  ScanGeometry g;
  bool bins_set = false;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("geometry: expected key=value in '" + item + "'");
    }
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    std::size_t used = 0;
    try {
      if (key == "n") {
        g.n = std::stoul(value, &used);
      } else if (key == "angles") {
        g.np_angles = std::stoul(value, &used);
      } else if (key == "bins") {
        g.nr_bins = std::stoul(value, &used);
        bins_set = true;
      } else if (key == "arc") {
        g.arc_degrees = std::stod(value, &used);
      } else if (key == "pixel") {
        g.pixel_size = std::stod(value, &used);
      } else {
        throw std::invalid_argument("geometry: unknown key '" + key + "'");
      }
    } catch (const std::out_of_range&) {
      used = 0;
    } catch (const std::invalid_argument& e) {
      if (std::string(e.what()).starts_with("geometry:")) throw;
      used = 0;
    }
    if (used == 0 || used != value.size()) {
      throw std::invalid_argument("geometry: bad value for '" + key + "': " + value);
    }
  }
  if (!bins_set) g.nr_bins = g.n;
  g.validate();
  return g;
}

std::string format_geometry(const ScanGeometry& g) {
  std::ostringstream os;
  os << "n=" << g.n << ",angles=" << g.np_angles << ",bins=" << g.nr_bins
     << ",arc=" << g.arc_degrees << ",pixel=" << g.pixel_size;
  return os.str();
}

std::span<const std::uint32_t> SystemMatrix::row_cols(std::size_t row) const noexcept {
  return std::span(cols_).subspan(row_ptr_[row], row_ptr_[row + 1] - row_ptr_[row]);
}

std::span<const double> SystemMatrix::row_weights(std::size_t row) const noexcept {
  return std::span(weights_).subspan(row_ptr_[row], row_ptr_[row + 1] - row_ptr_[row]);
}

SystemMatrix SystemMatrix::from_rows(std::size_t num_cols,
                                     std::vector<std::vector<MatrixEntry>> rows) {
  SystemMatrix m;
  m.num_cols_ = num_cols;
  m.row_ptr_.assign(1, 0);
  for (auto& row : rows) {
    std::sort(row.begin(), row.end(),
              [](const MatrixEntry& a, const MatrixEntry& b) { return a.col < b.col; });
    for (std::size_t k = 0; k < row.size(); ++k) {
      const MatrixEntry& e = row[k];
      if (e.col >= num_cols) throw std::invalid_argument("SystemMatrix: column out of range");
      if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
        throw std::invalid_argument("SystemMatrix: weights must be finite and >= 0");
      }
      if (!m.cols_.empty() && m.cols_.size() > m.row_ptr_.back() && m.cols_.back() == e.col) {
        m.weights_.back() += e.weight;
      } else {
        m.cols_.push_back(e.col);
        m.weights_.push_back(e.weight);
      }
    }
    m.row_ptr_.push_back(m.cols_.size());
  }
  m.build_transpose();
  return m;
}

void SystemMatrix::build_transpose() {
  col_ptr_.assign(num_cols_ + 1, 0);
  for (std::uint32_t c : cols_) ++col_ptr_[c + 1];
  for (std::size_t j = 0; j < num_cols_; ++j) col_ptr_[j + 1] += col_ptr_[j];
  t_rows_.resize(cols_.size());
  t_weights_.resize(cols_.size());
  std::vector<std::size_t> cursor(col_ptr_.begin(), col_ptr_.end() - 1);
  // Rows are visited in order, so each column list ends up sorted by row.
  for (std::size_t i = 0; i + 1 < row_ptr_.size(); ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const std::size_t pos = cursor[cols_[k]]++;
      t_rows_[pos] = static_cast<std::uint32_t>(i);
      t_weights_[pos] = weights_[k];
    }
  }
}

void SystemMatrix::apply(std::span<const double> image, std::span<double> out) const {
  if (image.size() != num_cols_ || out.size() != num_rows()) {
    throw ShapeError("forward projection: operand sizes do not match the system matrix");
  }
  const auto rows = static_cast<std::ptrdiff_t>(num_rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) acc += weights_[k] * image[cols_[k]];
    out[i] = acc;
  }
}

void SystemMatrix::apply_adjoint(std::span<const double> sinogram, std::span<double> out) const {
  if (sinogram.size() != num_rows() || out.size() != num_cols_) {
    throw ShapeError("back projection: operand sizes do not match the system matrix");
  }
  const auto cols = static_cast<std::ptrdiff_t>(num_cols_);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < cols; ++j) {
    double acc = 0.0;
    for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) acc += t_weights_[k] * sinogram[t_rows_[k]];
    out[j] = acc;
  }
}

std::vector<double> SystemMatrix::column_sums() const {
  std::vector<double> s(num_cols_, 0.0);
  for (std::size_t j = 0; j < num_cols_; ++j) {
    double acc = 0.0;
    for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) acc += t_weights_[k];
    s[j] = acc;
  }
  return s;
}

std::vector<MatrixEntry> trace_ray(const ScanGeometry& g, std::size_t angle, std::size_t bin) {
  const double theta = g.angle_radians(angle);
  double c = std::cos(theta);
  double s = std::sin(theta);
  // Snap round-off so axis-aligned rays stay exactly axis-aligned.
  if (std::abs(c) < 1e-12) c = 0.0;
  if (std::abs(s) < 1e-12) s = 0.0;

  const double offset = g.bin_offset(bin);
  const double px = offset * c;
  const double py = offset * s;
  const double dx = -s;
  const double dy = c;

  const double half = static_cast<double>(g.n) * g.pixel_size / 2.0;
  double t_min = -std::numeric_limits<double>::infinity();
  double t_max = std::numeric_limits<double>::infinity();
  auto clip = [&](double p, double d) {
    if (d == 0.0) {
      if (p < -half || p > half) t_min = std::numeric_limits<double>::infinity();
      return;
    }
    double t0 = (-half - p) / d;
    double t1 = (half - p) / d;
    if (t0 > t1) std::swap(t0, t1);
    t_min = std::max(t_min, t0);
    t_max = std::min(t_max, t1);
  };
  clip(px, dx);
  clip(py, dy);
  if (!(t_max > t_min)) return {};

  // Parametric crossings with every grid line inside (t_min, t_max).
  std::vector<double> ts{t_min, t_max};
  auto add_crossings = [&](double p, double d) {
    if (d == 0.0) return;
    for (std::size_t k = 0; k <= g.n; ++k) {
      const double line = -half + static_cast<double>(k) * g.pixel_size;
      const double t = (line - p) / d;
      if (t > t_min && t < t_max) ts.push_back(t);
    }
  };
  add_crossings(px, dx);
  add_crossings(py, dy);
  std::sort(ts.begin(), ts.end());

  std::vector<MatrixEntry> entries;
  const auto last = static_cast<std::ptrdiff_t>(g.n) - 1;
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    const double len = ts[k + 1] - ts[k];
    if (len <= 1e-12 * g.pixel_size) continue;
    const double tm = 0.5 * (ts[k] + ts[k + 1]);
    const double x = px + tm * dx;
    const double y = py + tm * dy;
    const auto col = std::clamp<std::ptrdiff_t>(
        static_cast<std::ptrdiff_t>(std::floor((x + half) / g.pixel_size)), 0, last);
    const auto row = std::clamp<std::ptrdiff_t>(
        static_cast<std::ptrdiff_t>(std::floor((half - y) / g.pixel_size)), 0, last);
    entries.push_back({static_cast<std::uint32_t>(row * static_cast<std::ptrdiff_t>(g.n) + col), len});
  }
  std::sort(entries.begin(), entries.end(),
            [](const MatrixEntry& a, const MatrixEntry& b) { return a.col < b.col; });
  // Merge segments that landed in the same pixel (only possible through corners).
  std::vector<MatrixEntry> merged;
  for (const auto& e : entries) {
    if (!merged.empty() && merged.back().col == e.col) {
      merged.back().weight += e.weight;
    } else {
      merged.push_back(e);
    }
  }
  return merged;
}

SystemMatrix build_system_matrix(const ScanGeometry& geometry) {
  geometry.validate();
  std::vector<std::vector<MatrixEntry>> rows(geometry.num_rows());
  const auto n_angles = static_cast<std::ptrdiff_t>(geometry.np_angles);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t a = 0; a < n_angles; ++a) {
    for (std::size_t b = 0; b < geometry.nr_bins; ++b) {
      rows[static_cast<std::size_t>(a) * geometry.nr_bins + b] =
          trace_ray(geometry, static_cast<std::size_t>(a), b);
    }
  }
  SystemMatrix m = SystemMatrix::from_rows(geometry.num_pixels(), std::move(rows));
  m.geometry_ = geometry;
  m.has_geometry_ = true;
  return m;
}

Sinogram forward_project(const SystemMatrix& matrix, const ActivityImage& image) {
  if (!matrix.has_geometry() || image.n() != matrix.geometry().n) {
    throw ShapeError("forward_project: image size does not match geometry");
  }
  const ScanGeometry& g = matrix.geometry();
  std::vector<double> y(g.num_rows());
  matrix.apply(image.data(), y);
  return Sinogram(g.np_angles, g.nr_bins, std::move(y));
}

std::vector<double> back_project(const SystemMatrix& matrix, const Sinogram& sinogram) {
  if (!matrix.has_geometry() || sinogram.np_angles() != matrix.geometry().np_angles ||
      sinogram.nr_bins() != matrix.geometry().nr_bins) {
    throw ShapeError("back_project: sinogram dimensions do not match geometry");
  }
  std::vector<double> x(matrix.num_cols());
  matrix.apply_adjoint(sinogram.data(), x);
  return x;
}

}  // namespace spect
