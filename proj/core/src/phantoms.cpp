#include "spect/phantoms.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace spect {

bool EllipseSpec::contains(double x, double y) const noexcept {
  const double dx = x - cx;
  const double dy = y - cy;
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  const double u = dx * c + dy * s;
  const double v = -dx * s + dy * c;
  return (u / a) * (u / a) + (v / b) * (v / b) <= 1.0;
}

double pixel_center_x(std::size_t col, std::size_t n) noexcept {
  return (2.0 * static_cast<double>(col) + 1.0 - static_cast<double>(n)) / static_cast<double>(n);
}

double pixel_center_y(std::size_t row, std::size_t n) noexcept {
  return (static_cast<double>(n) - 2.0 * static_cast<double>(row) - 1.0) / static_cast<double>(n);
}

ActivityImage rasterize(const PhantomRecipe& recipe) {
  const std::size_t n = recipe.n;
  ActivityImage img(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double y = pixel_center_y(r, n);
    for (std::size_t c = 0; c < n; ++c) {
      const double x = pixel_center_x(c, n);
      double v = 0.0;
      for (const auto& e : recipe.shapes) {
        if (e.contains(x, y)) v += e.intensity;
      }
      img.at(r, c) = v > 0.0 ? v : 0.0;
    }
  }
  return img;
}

void RandomPhantomConfig::validate() const {
  if (min_shapes < 1 || max_shapes < min_shapes) {
    throw std::invalid_argument("random phantom: shape count range is empty");
  }
  if (!(center_radius >= 0.0 && center_radius <= 1.0)) {
    throw std::invalid_argument("random phantom: centre radius must lie in [0, 1]");
  }
  if (!(min_axis > 0.0 && max_axis >= min_axis)) {
    throw std::invalid_argument("random phantom: semi-axis range is empty");
  }
  if (!(min_intensity > 0.0 && max_intensity >= min_intensity)) {
    throw std::invalid_argument("random phantom: intensity range is empty");
  }
}

std::pair<PhantomRecipe, ActivityImage> random_phantom(Rng& rng, std::size_t n,
                                                       const RandomPhantomConfig& config) {
  config.validate();
  if (n < 2) throw std::invalid_argument("random phantom: n must be >= 2");
  for (;;) {
    PhantomRecipe recipe;
    recipe.n = n;
    const auto count = static_cast<std::size_t>(rng.uniform_int(
        static_cast<std::int64_t>(config.min_shapes), static_cast<std::int64_t>(config.max_shapes)));
    for (std::size_t k = 0; k < count; ++k) {
      EllipseSpec e;
      const double radius = config.center_radius * std::sqrt(rng.next_unit());
      const double angle = 2.0 * std::numbers::pi * rng.next_unit();
      e.cx = radius * std::cos(angle);
      e.cy = radius * std::sin(angle);
      e.a = rng.uniform(config.min_axis, config.max_axis);
      e.b = rng.uniform(config.min_axis, config.max_axis);
      e.phi = rng.uniform(0.0, std::numbers::pi);
      e.intensity = rng.uniform(config.min_intensity, config.max_intensity);
      recipe.shapes.push_back(e);
    }
    ActivityImage img = rasterize(recipe);
    if (img.max() > 0.0) return {std::move(recipe), std::move(img)};
  }
}

SheppLoganVariant parse_shepp_logan_variant(const std::string& name) {
  if (name == "original") return SheppLoganVariant::kOriginal;
  if (name == "modified" || name == "modified-high-contrast") return SheppLoganVariant::kModified;
  throw std::invalid_argument("unknown Shepp-Logan variant: " + name);
}

std::string to_string(SheppLoganVariant variant) {
  return variant == SheppLoganVariant::kOriginal ? "original" : "modified";
}

PhantomRecipe shepp_logan_recipe(std::size_t n, SheppLoganVariant variant) {
  struct Row {
    double a, b, cx, cy, phi_deg, original, modified;
  };
  static constexpr std::array<Row, 10> kTable{{
      {0.6900, 0.9200, 0.00, 0.0000, 0.0, 2.00, 1.0},
      {0.6624, 0.8740, 0.00, -0.0184, 0.0, -0.98, -0.8},
      {0.1100, 0.3100, 0.22, 0.0000, -18.0, -0.02, -0.2},
      {0.1600, 0.4100, -0.22, 0.0000, 18.0, -0.02, -0.2},
      {0.2100, 0.2500, 0.00, 0.3500, 0.0, 0.01, 0.1},
      {0.0460, 0.0460, 0.00, 0.1000, 0.0, 0.01, 0.1},
      {0.0460, 0.0460, 0.00, -0.1000, 0.0, 0.01, 0.1},
      {0.0460, 0.0230, -0.08, -0.6050, 0.0, 0.01, 0.1},
      {0.0230, 0.0230, 0.00, -0.6060, 0.0, 0.01, 0.1},
      {0.0230, 0.0460, 0.06, -0.6050, 0.0, 0.01, 0.1},
  }};
  PhantomRecipe recipe;
  recipe.n = n;
  for (const Row& r : kTable) {
    recipe.shapes.push_back({r.cx, r.cy, r.a, r.b, r.phi_deg * std::numbers::pi / 180.0,
                             variant == SheppLoganVariant::kOriginal ? r.original : r.modified});
  }
  return recipe;
}

ActivityImage shepp_logan(std::size_t n, SheppLoganVariant variant) {
  if (n < 16) throw std::invalid_argument("shepp_logan: n must be >= 16");
  return rasterize(shepp_logan_recipe(n, variant));
}

std::string recipe_to_json(const PhantomRecipe& recipe) {
  nlohmann::ordered_json j;
  j["n"] = recipe.n;
  j["shapes"] = nlohmann::ordered_json::array();
  for (const auto& e : recipe.shapes) {
    j["shapes"].push_back({{"cx", e.cx}, {"cy", e.cy}, {"a", e.a}, {"b", e.b}, {"phi", e.phi},
                           {"intensity", e.intensity}});
  }
  return j.dump(1) + "\n";
}

PhantomRecipe recipe_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  PhantomRecipe recipe;
  recipe.n = j.at("n").get<std::size_t>();
  for (const auto& e : j.at("shapes")) {
    recipe.shapes.push_back({e.at("cx").get<double>(), e.at("cy").get<double>(),
                             e.at("a").get<double>(), e.at("b").get<double>(),
                             e.at("phi").get<double>(), e.at("intensity").get<double>()});
  }
  return recipe;
}

}  // namespace spect
