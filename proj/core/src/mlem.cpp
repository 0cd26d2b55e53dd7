#include "spect/mlem.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "spect/error.hpp"

namespace spect {
namespace {

void check_data(const SystemMatrix& matrix, std::span<const double> sinogram) {
  if (sinogram.size() != matrix.num_rows()) {
    throw ShapeError("MLEM: sinogram size does not match the system matrix");
  }
  for (double y : sinogram) {
    if (!(y >= 0.0) || !std::isfinite(y)) {
      throw std::invalid_argument("MLEM: sinogram must be finite and nonnegative");
    }
  }
}

}  // namespace

double poisson_log_likelihood(const SystemMatrix& matrix, std::span<const double> sinogram,
                              std::span<const double> image) {
  std::vector<double> proj(matrix.num_rows());
  matrix.apply(image, proj);
  double total = 0.0;
  for (std::size_t i = 0; i < proj.size(); ++i) {
    const double y = sinogram[i];
    const double p = proj[i];
    if (p > 0.0) {
      total += (y > 0.0 ? y * std::log(p) : 0.0) - p;
    } else if (y > 0.0) {
      return -std::numeric_limits<double>::infinity();
    }
  }
  return total;
}

double mlem_default_init(const SystemMatrix& matrix, std::span<const double> sinogram) {
  const auto s = matrix.column_sums();
  const double total_s = std::accumulate(s.begin(), s.end(), 0.0);
  const double total_y = std::accumulate(sinogram.begin(), sinogram.end(), 0.0);
  if (!(total_s > 0.0)) throw ModelMismatchError("MLEM: system matrix has no sensitivity");
  return total_y > 0.0 ? total_y / total_s : 1.0;
}

MlemState mlem_init(const SystemMatrix& matrix, std::span<const double> sinogram,
                    double init_value) {
  check_data(matrix, sinogram);
  if (!(init_value > 0.0) || !std::isfinite(init_value)) {
    throw std::invalid_argument("MLEM: init_value must be finite and > 0");
  }
  MlemState state;
  state.sensitivity = matrix.column_sums();
  state.estimate.resize(matrix.num_cols());
  for (std::size_t j = 0; j < state.estimate.size(); ++j) {
    state.estimate[j] = state.sensitivity[j] > 0.0 ? init_value : 0.0;
  }
  state.log_likelihood_history.push_back(
      poisson_log_likelihood(matrix, sinogram, state.estimate));
  return state;
}

MlemState mlem_step(const SystemMatrix& matrix, std::span<const double> sinogram,
                    MlemState state) {
  check_data(matrix, sinogram);
  if (state.estimate.size() != matrix.num_cols() ||
      state.sensitivity.size() != matrix.num_cols()) {
    throw ShapeError("MLEM: state does not match the system matrix");
  }
  std::vector<double> ratio(matrix.num_rows());
  matrix.apply(state.estimate, ratio);
  for (std::size_t i = 0; i < ratio.size(); ++i) {
    const double y = sinogram[i];
    if (ratio[i] > 0.0) {
      ratio[i] = y / ratio[i];
    } else if (y > 0.0) {
      throw ModelMismatchError("MLEM: bin " + std::to_string(i) +
                               " has counts but zero expected counts under the current estimate");
    } else {
      ratio[i] = 0.0;
    }
  }
  std::vector<double> correction(matrix.num_cols());
  matrix.apply_adjoint(ratio, correction);
  for (std::size_t j = 0; j < correction.size(); ++j) {
    const double s = state.sensitivity[j];
    state.estimate[j] = s > 0.0 ? state.estimate[j] * correction[j] / s : 0.0;
  }
  ++state.iteration;
  state.log_likelihood_history.push_back(
      poisson_log_likelihood(matrix, sinogram, state.estimate));
  return state;
}

MlemResult mlem_run(const SystemMatrix& matrix, std::span<const double> sinogram,
                    std::size_t n_iters, double init_value) {
  if (n_iters < 1) throw std::invalid_argument("MLEM: n_iters must be >= 1");
  MlemState state = mlem_init(matrix, sinogram, init_value);
  for (std::size_t k = 0; k < n_iters; ++k) state = mlem_step(matrix, sinogram, std::move(state));
  return {std::move(state.estimate), std::move(state.log_likelihood_history), init_value};
}

ActivityImage mlem_reconstruct(const SystemMatrix& matrix, const Sinogram& sinogram,
                               std::size_t n_iters, double init_value,
                               std::vector<double>* log_likelihood_history) {
  if (!matrix.has_geometry()) throw ShapeError("mlem_reconstruct: matrix has no geometry");
  const auto& g = matrix.geometry();
  if (sinogram.np_angles() != g.np_angles || sinogram.nr_bins() != g.nr_bins) {
    throw ShapeError("mlem_reconstruct: sinogram dimensions do not match geometry");
  }
  MlemResult r = mlem_run(matrix, sinogram.data(), n_iters, init_value);
  if (log_likelihood_history) *log_likelihood_history = std::move(r.log_likelihood_history);
  return ActivityImage(g.n, std::move(r.estimate));
}

}  // namespace spect
