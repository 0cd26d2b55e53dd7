#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "spect/error.hpp"
#include "spect/projector.hpp"

using namespace spect;

namespace {

void expect_matches_oracle(const ScanGeometry& g) {
  const SystemMatrix p = build_system_matrix(g);
  const std::vector<double> dense = oracle::dense_system_matrix(g);
  const std::size_t cols = g.num_pixels();
  double worst = 0;
  for (std::size_t r = 0; r < p.num_rows(); ++r) {
    std::vector<double> row(cols, 0.0);
    const auto c = p.row_cols(r);
    const auto w = p.row_weights(r);
    for (std::size_t k = 0; k < c.size(); ++k) row[c[k]] = w[k];
    for (std::size_t j = 0; j < cols; ++j) worst = std::max(worst, std::abs(row[j] - dense[r * cols + j]));
  }
  EXPECT_LT(worst, 1e-9) << format_geometry(g);
}

}  // namespace

TEST(Projector, MatchesBoxClippingOracle) {
  expect_matches_oracle({8, 6, 8, 360.0, 1.0});
  expect_matches_oracle({9, 7, 11, 180.0, 1.0});
  expect_matches_oracle({6, 5, 6, 360.0, 0.5});
}

TEST(Projector, AxisAlignedRaysHaveUnitWeights) {
  const ScanGeometry g{8, 4, 8, 360.0, 1.0};
  const SystemMatrix p = build_system_matrix(g);
  for (std::size_t b = 0; b < g.nr_bins; ++b) {
    const auto w = p.row_weights(b);
    ASSERT_EQ(w.size(), g.n);
    for (double x : w) EXPECT_NEAR(x, 1.0, 1e-12);
  }
}

TEST(Projector, ForwardOfUniformImageGivesChordLengths) {
  const ScanGeometry g{32, 12, 32, 360.0, 1.0};
  const SystemMatrix p = build_system_matrix(g);
  ActivityImage one(32, std::vector<double>(32 * 32, 1.0));
  const Sinogram s = forward_project(p, one);
  // total mass per angle equals image area
  for (std::size_t k = 0; k < g.np_angles; ++k) {
    double row = 0;
    for (std::size_t b = 0; b < g.nr_bins; ++b) row += s.at(k, b);
    if (k % 3 == 0) EXPECT_NEAR(row, 1024.0, 1e-8);
  }
}

TEST(Projector, AdjointIdentity) {
  const ScanGeometry g{16, 10, 20, 360.0, 1.0};
  const SystemMatrix p = build_system_matrix(g);
  Rng rng(5);
  std::vector<double> f(g.num_pixels()), y(g.num_rows()), pf(g.num_rows()), pty(g.num_pixels());
  for (auto& v : f) v = rng.next_unit();
  for (auto& v : y) v = rng.next_unit();
  p.apply(f, pf);
  p.apply_adjoint(y, pty);
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += y[i] * pf[i];
  for (std::size_t j = 0; j < f.size(); ++j) rhs += f[j] * pty[j];
  EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs));
}

TEST(Projector, ColumnSumsMatchBackProjectionOfOnes) {
  const ScanGeometry g{12, 8, 12, 360.0, 1.0};
  const SystemMatrix p = build_system_matrix(g);
  const auto s = p.column_sums();
  const auto bp = back_project(p, Sinogram(8, 12, std::vector<double>(96, 1.0)));
  for (std::size_t j = 0; j < s.size(); ++j) EXPECT_NEAR(s[j], bp[j], 1e-12);
}

TEST(Projector, FromRowsMergesAndValidates) {
  auto m = SystemMatrix::from_rows(3, {{{2, 1.0}, {0, 0.5}, {2, 0.25}}, {}});
  ASSERT_EQ(m.num_rows(), 2u);
  ASSERT_EQ(m.nnz(), 2u);
  EXPECT_EQ(m.row_cols(0)[0], 0u);
  EXPECT_DOUBLE_EQ(m.row_weights(0)[1], 1.25);
  EXPECT_THROW(SystemMatrix::from_rows(3, {{{3, 1.0}}}), std::invalid_argument);
  EXPECT_THROW(SystemMatrix::from_rows(3, {{{1, -1.0}}}), std::invalid_argument);
}

TEST(Projector, ShapeMismatchThrows) {
  const SystemMatrix p = build_system_matrix({8, 4, 8, 360.0, 1.0});
  EXPECT_THROW(forward_project(p, ActivityImage(16)), ShapeError);
}

TEST(Geometry, ParseAndFormat) {
  const ScanGeometry g = parse_geometry("n=64,angles=24,arc=180");
  EXPECT_EQ(g.n, 64u);
  EXPECT_EQ(g.nr_bins, 64u);
  EXPECT_EQ(g.np_angles, 24u);
  EXPECT_DOUBLE_EQ(g.arc_degrees, 180.0);
  EXPECT_EQ(parse_geometry(format_geometry(g)), g);
  EXPECT_THROW(parse_geometry("n=0"), std::invalid_argument);
  EXPECT_THROW(parse_geometry("bogus=3"), std::invalid_argument);
  EXPECT_DOUBLE_EQ(g.angle_radians(12), M_PI / 2);
}
