#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spect/images.hpp"

namespace spect {

enum class SsimWindow { kGlobal, kUniform };

/// Constants of the structural similarity index. C1 = (k1 L)^2, C2 = (k2 L)^2.
struct SsimConfig {
  double k1 = 0.01;
  double k2 = 0.03;
  /// Dynamic range L; must be set (> 0) before calling ssim().
  double dynamic_range = 1.0;
  SsimWindow window = SsimWindow::kUniform;
  /// Side of the square window in kUniform mode, >= 2.
  std::size_t window_size = 8;

  double c1() const noexcept { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const noexcept { return (k2 * dynamic_range) * (k2 * dynamic_range); }
  void validate() const;
};

/// Parses "global" or "window:<w>".
SsimConfig parse_ssim_mode(const std::string& text);
std::string format_ssim_mode(const SsimConfig& config);

/// Square image view used by the metric functions.
struct ImageView {
  std::span<const double> values;
  std::size_t height = 0;
  std::size_t width = 0;
};

ImageView view_of(const ActivityImage& image);

double mse(ImageView x, ImageView y);

/// Mean SSIM over all valid w x w windows (stride 1), or the single
/// whole-image value in global mode. Population statistics throughout.
double ssim(ImageView x, ImageView y, const SsimConfig& config);

/// Per-window SSIM values, (H - w + 1) x (W - w + 1) row-major; a 1x1 map in global mode.
std::vector<double> ssim_map(ImageView x, ImageView y, const SsimConfig& config);

/// Pearson correlation; throws std::domain_error when either input is constant.
double pcc(ImageView x, ImageView y);

double mse(const ActivityImage& x, const ActivityImage& y);
double ssim(const ActivityImage& x, const ActivityImage& y, const SsimConfig& config);
double pcc(const ActivityImage& x, const ActivityImage& y);

struct MetricsReport {
  double mse = 0.0;
  double ssim = 0.0;
  double pcc = 0.0;
  std::string method;
  std::string reference_path;
  std::string test_path;
  std::size_t n = 0;
  std::string ssim_mode;
  double normalization = 1.0;

  std::string to_json() const;
};

/// Divides both images by the reference maximum, then computes MSE, SSIM
/// (L = dynamic range of the normalised reference) and PCC. PCC is reported
/// as 0 when the test image is constant. Throws std::invalid_argument for an
/// all-zero reference.
MetricsReport evaluate_pair(const ActivityImage& reference, const ActivityImage& test,
                            SsimConfig config);

}  // namespace spect

namespace spect {

/// Mean SSIM of `x` against `y` and its exact gradient with respect to `x`
/// (written to `grad_x`, same size as x). Shared by the training loss.
double ssim_with_gradient(ImageView x, ImageView y, const SsimConfig& config,
                          std::span<double> grad_x);

}  // namespace spect
