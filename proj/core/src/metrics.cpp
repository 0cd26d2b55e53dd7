#include "spect/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "spect/error.hpp"

namespace spect {
namespace {

void check_same(ImageView x, ImageView y) {
  if (x.height != y.height || x.width != y.width || x.values.size() != y.values.size() ||
      x.values.size() != x.height * x.width || x.values.empty()) {
    throw ShapeError("metrics: images must have identical, non-empty dimensions");
  }
}

struct WindowStats {
  double mu_x, mu_y, var_x, var_y, cov;
};

WindowStats window_stats(ImageView x, ImageView y, std::size_t r0, std::size_t c0,
                         std::size_t h, std::size_t w) {
  const double count = static_cast<double>(h * w);
  double sx = 0.0, sy = 0.0;
  for (std::size_t r = r0; r < r0 + h; ++r) {
    const double* px = x.values.data() + r * x.width;
    const double* py = y.values.data() + r * y.width;
    for (std::size_t c = c0; c < c0 + w; ++c) {
      sx += px[c];
      sy += py[c];
    }
  }
  WindowStats s{sx / count, sy / count, 0.0, 0.0, 0.0};
  for (std::size_t r = r0; r < r0 + h; ++r) {
    const double* px = x.values.data() + r * x.width;
    const double* py = y.values.data() + r * y.width;
    for (std::size_t c = c0; c < c0 + w; ++c) {
      const double dx = px[c] - s.mu_x;
      const double dy = py[c] - s.mu_y;
      s.var_x += dx * dx;
      s.var_y += dy * dy;
      s.cov += dx * dy;
    }
  }
  s.var_x /= count;
  s.var_y /= count;
  s.cov /= count;
  return s;
}

struct WindowGrid {
  std::size_t h, w, rows, cols;
};

WindowGrid window_grid(ImageView x, const SsimConfig& config) {
  if (config.window == SsimWindow::kGlobal) return {x.height, x.width, 1, 1};
  if (config.window_size > x.height || config.window_size > x.width) {
    throw ShapeError("ssim: window larger than image");
  }
  return {config.window_size, config.window_size, x.height - config.window_size + 1,
          x.width - config.window_size + 1};
}

double ssim_value(const WindowStats& s, double c1, double c2) {
  return (2.0 * s.mu_x * s.mu_y + c1) * (2.0 * s.cov + c2) /
         ((s.mu_x * s.mu_x + s.mu_y * s.mu_y + c1) * (s.var_x + s.var_y + c2));
}

}  // namespace

void SsimConfig::validate() const {
  if (!(k1 > 0.0) || !(k2 > 0.0)) throw std::invalid_argument("ssim: k1 and k2 must be > 0");
  if (!(dynamic_range > 0.0) || !std::isfinite(dynamic_range)) {
    throw std::invalid_argument("ssim: dynamic range L must be > 0");
  }
  if (window == SsimWindow::kUniform && window_size < 2) {
    throw std::invalid_argument("ssim: window size must be >= 2");
  }
}

SsimConfig parse_ssim_mode(const std::string& text) {
  SsimConfig config;
  if (text == "global") {
    config.window = SsimWindow::kGlobal;
    return config;
  }
  if (text.starts_with("window:")) {
    const std::string w = text.substr(7);
    std::size_t used = 0;
    unsigned long value = 0;
    try {
      value = std::stoul(w, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != w.size() || value < 2) {
      throw std::invalid_argument("ssim mode: bad window size '" + w + "'");
    }
    config.window = SsimWindow::kUniform;
    config.window_size = value;
    return config;
  }
  throw std::invalid_argument("ssim mode must be 'global' or 'window:<w>', got '" + text + "'");
}

std::string format_ssim_mode(const SsimConfig& config) {
  return config.window == SsimWindow::kGlobal ? "global"
                                              : "window:" + std::to_string(config.window_size);
}

ImageView view_of(const ActivityImage& image) { return {image.data(), image.n(), image.n()}; }

double mse(ImageView x, ImageView y) {
  check_same(x, y);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    const double d = x.values[i] - y.values[i];
    acc += d * d;
  }
  return acc / static_cast<double>(x.values.size());
}

std::vector<double> ssim_map(ImageView x, ImageView y, const SsimConfig& config) {
  check_same(x, y);
  config.validate();
  const WindowGrid g = window_grid(x, config);
  std::vector<double> map(g.rows * g.cols);
  const double c1 = config.c1();
  const double c2 = config.c2();
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < g.cols; ++c) {
      map[r * g.cols + c] = ssim_value(window_stats(x, y, r, c, g.h, g.w), c1, c2);
    }
  }
  return map;
}

double ssim(ImageView x, ImageView y, const SsimConfig& config) {
  const auto map = ssim_map(x, y, config);
  double acc = 0.0;
  for (double v : map) acc += v;
  return acc / static_cast<double>(map.size());
}

double ssim_with_gradient(ImageView x, ImageView y, const SsimConfig& config,
                          std::span<double> grad_x) {
  check_same(x, y);
  config.validate();
  if (grad_x.size() != x.values.size()) throw ShapeError("ssim gradient: output size mismatch");
  std::fill(grad_x.begin(), grad_x.end(), 0.0);
  const WindowGrid g = window_grid(x, config);
  const double c1 = config.c1();
  const double c2 = config.c2();
  const double inv_count = 1.0 / static_cast<double>(g.h * g.w);
  const double inv_windows = 1.0 / static_cast<double>(g.rows * g.cols);
  double total = 0.0;
  for (std::size_t r0 = 0; r0 < g.rows; ++r0) {
    for (std::size_t c0 = 0; c0 < g.cols; ++c0) {
      const WindowStats s = window_stats(x, y, r0, c0, g.h, g.w);
      const double a = 2.0 * s.mu_x * s.mu_y + c1;
      const double b = 2.0 * s.cov + c2;
      const double c = s.mu_x * s.mu_x + s.mu_y * s.mu_y + c1;
      const double d = s.var_x + s.var_y + c2;
      const double value = a * b / (c * d);
      total += value;
      // Partials of the window value with respect to its statistics.
      const double d_mu = 2.0 * s.mu_y * b / (c * d) - value * 2.0 * s.mu_x / c;
      const double d_var = -value / d;
      const double d_cov = 2.0 * a / (c * d);
      const double base = d_mu * inv_count * inv_windows;
      const double k_var = 2.0 * d_var * inv_count * inv_windows;
      const double k_cov = d_cov * inv_count * inv_windows;
      for (std::size_t r = r0; r < r0 + g.h; ++r) {
        const double* px = x.values.data() + r * x.width;
        const double* py = y.values.data() + r * y.width;
        double* gx = grad_x.data() + r * x.width;
        for (std::size_t cc = c0; cc < c0 + g.w; ++cc) {
          gx[cc] += base + k_var * (px[cc] - s.mu_x) + k_cov * (py[cc] - s.mu_y);
        }
      }
    }
  }
  return total * inv_windows;
}

double pcc(ImageView x, ImageView y) {
  check_same(x, y);
  const WindowStats s = window_stats(x, y, 0, 0, x.height, x.width);
  if (!(s.var_x > 0.0) || !(s.var_y > 0.0)) {
    throw std::domain_error("pcc: correlation is undefined for a constant image");
  }
  return s.cov / (std::sqrt(s.var_x) * std::sqrt(s.var_y));
}

double mse(const ActivityImage& x, const ActivityImage& y) { return mse(view_of(x), view_of(y)); }
double ssim(const ActivityImage& x, const ActivityImage& y, const SsimConfig& config) {
  return ssim(view_of(x), view_of(y), config);
}
double pcc(const ActivityImage& x, const ActivityImage& y) { return pcc(view_of(x), view_of(y)); }

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["method"] = method;
  j["reference"] = reference_path;
  j["test"] = test_path;
  j["n"] = n;
  j["ssim_mode"] = ssim_mode;
  j["normalization"] = normalization;
  j["mse"] = mse;
  j["ssim"] = ssim;
  j["pcc"] = pcc;
  return j.dump(2);
}

MetricsReport evaluate_pair(const ActivityImage& reference, const ActivityImage& test,
                            SsimConfig config) {
  if (reference.n() != test.n()) throw ShapeError("evaluate_pair: image sizes differ");
  const double scale = reference.max();
  if (!(scale > 0.0)) throw std::invalid_argument("evaluate_pair: reference image is all zero");
  std::vector<double> ref(reference.data().begin(), reference.data().end());
  std::vector<double> tst(test.data().begin(), test.data().end());
  for (double& v : ref) v /= scale;
  for (double& v : tst) v /= scale;
  const ImageView rv{ref, reference.n(), reference.n()};
  const ImageView tv{tst, test.n(), test.n()};

  const auto [lo, hi] = std::minmax_element(ref.begin(), ref.end());
  config.dynamic_range = *hi - *lo > 0.0 ? *hi - *lo : 1.0;

  MetricsReport report;
  report.n = reference.n();
  report.ssim_mode = format_ssim_mode(config);
  report.normalization = scale;
  report.mse = mse(rv, tv);
  report.ssim = ssim(tv, rv, config);
  try {
    report.pcc = pcc(rv, tv);
  } catch (const std::domain_error&) {
    report.pcc = 0.0;
  }
  return report;
}

}  // namespace spect
