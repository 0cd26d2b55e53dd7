#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "spect/images.hpp"
#include "spect/rng.hpp"

namespace spect {

/// Ellipse in normalised coordinates: the grid spans [-1, 1] on both axes,
/// x to the right, y up. `phi` rotates the a-axis counter-clockwise from +x.
struct EllipseSpec {
  double cx = 0.0;
  double cy = 0.0;
  double a = 1.0;
  double b = 1.0;
  double phi = 0.0;
  double intensity = 1.0;

  bool contains(double x, double y) const noexcept;
  friend bool operator==(const EllipseSpec&, const EllipseSpec&) = default;
};

struct PhantomRecipe {
  std::vector<EllipseSpec> shapes;
  std::size_t n = 128;

  friend bool operator==(const PhantomRecipe&, const PhantomRecipe&) = default;
};

/// Normalised x of column `col` (pixel centre); exact mirror for col <-> n-1-col.
double pixel_center_x(std::size_t col, std::size_t n) noexcept;
/// Normalised y of row `row`; row 0 is the top of the image.
double pixel_center_y(std::size_t row, std::size_t n) noexcept;

/// Sum of intensities of the shapes containing each pixel centre, clamped at 0.
ActivityImage rasterize(const PhantomRecipe& recipe);

struct RandomPhantomConfig {
  std::size_t min_shapes = 1;
  std::size_t max_shapes = 8;
  double center_radius = 0.8;
  double min_axis = 0.05;
  double max_axis = 0.45;
  double min_intensity = 0.2;
  double max_intensity = 1.0;

  /// Throws std::invalid_argument on empty or inverted ranges.
  void validate() const;
};

/// Draws shape count, centres (uniform in a disk), semi-axes, rotation in
/// [0, pi) and intensity; redraws whenever the rasterised image is blank.
std::pair<PhantomRecipe, ActivityImage> random_phantom(Rng& rng, std::size_t n,
                                                       const RandomPhantomConfig& config = {});

enum class SheppLoganVariant { kOriginal, kModified };

SheppLoganVariant parse_shepp_logan_variant(const std::string& name);
std::string to_string(SheppLoganVariant variant);

/// The ten-ellipse head phantom. kOriginal uses the low-contrast intensities
/// (2, -0.98, -0.02, ...); kModified the high-contrast ones (1, -0.8, -0.2, ...).
PhantomRecipe shepp_logan_recipe(std::size_t n, SheppLoganVariant variant);

/// Throws std::invalid_argument for n < 16.
ActivityImage shepp_logan(std::size_t n, SheppLoganVariant variant);

std::string recipe_to_json(const PhantomRecipe& recipe);
PhantomRecipe recipe_from_json(const std::string& text);

}  // namespace spect
