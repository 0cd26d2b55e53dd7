#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "spect/images.hpp"
#include "spect/projector.hpp"

namespace spect {

/// Iterate of the Shepp-Vardi EM algorithm.
struct MlemState {
  std::vector<double> estimate;
  std::size_t iteration = 0;
  std::vector<double> sensitivity;
  /// Poisson log-likelihood of every iterate, starting with the initial one.
  std::vector<double> log_likelihood_history;
};

/// Sum_i [ y_i log (Pf)_i - (Pf)_i ], dropping log(y_i!). Returns -infinity
/// when some bin has y_i > 0 and (Pf)_i = 0.
double poisson_log_likelihood(const SystemMatrix& matrix, std::span<const double> sinogram,
                              std::span<const double> image);

/// Data-scaled uniform start value sum(y) / sum(s).
double mlem_default_init(const SystemMatrix& matrix, std::span<const double> sinogram);

/// Uniform start at `init_value` on pixels with nonzero sensitivity, 0 elsewhere.
MlemState mlem_init(const SystemMatrix& matrix, std::span<const double> sinogram,
                    double init_value);

/// f_j <- f_j / s_j * sum_i P_ij y_i / (Pf)_i.
///
/// Bins with (Pf)_i = 0 contribute nothing when y_i = 0; when y_i > 0 the
/// data cannot be explained by the current support and ModelMismatchError is
/// thrown.
MlemState mlem_step(const SystemMatrix& matrix, std::span<const double> sinogram,
                    MlemState state);

struct MlemResult {
  std::vector<double> estimate;
  std::vector<double> log_likelihood_history;
  double init_value = 0.0;
};

/// Runs `n_iters` (>= 1) steps from a uniform `init_value` (> 0).
MlemResult mlem_run(const SystemMatrix& matrix, std::span<const double> sinogram,
                    std::size_t n_iters, double init_value);

/// Image-typed wrapper; `matrix` must carry a geometry.
ActivityImage mlem_reconstruct(const SystemMatrix& matrix, const Sinogram& sinogram,
                               std::size_t n_iters, double init_value,
                               std::vector<double>* log_likelihood_history = nullptr);

}  // namespace spect
