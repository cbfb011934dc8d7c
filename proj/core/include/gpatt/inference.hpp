#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gpatt/grid.hpp"
#include "gpatt/kernels.hpp"
#include "gpatt/kronecker.hpp"

namespace gpatt {

/// Noise covariance D_N: sigma^2 on real slots, infinite on imaginary ones.
///
/// The infinite-variance limit is taken exactly. The solver works with the
/// scaling C = diag(mask / sigma), which zeroes imaginary rows and columns.
struct NoiseModel {
  double sigma_sq = 1.0;
  std::span<const std::uint8_t> mask;
};

struct PcgOptions {
  double tol = 1e-6;             ///< relative residual of the scaled system
  std::size_t max_iter = 1000;
  std::ostream* diagnostics = nullptr;  ///< JSON lines, one per solve
};

/// Lifted solution of (K_N + D_N) alpha = y; alpha is 0 on imaginary slots.
struct PosteriorSolve {
  Eigen::VectorXd alpha;
  std::size_t iterations = 0;
  double final_residual = 0.0;
  std::vector<double> residual_history;
  /// rhs^T (K_N + D_N)^{-1} rhs from the CG energy functional, accurate to
  /// second order in the solver error.
  double quadratic_form = 0.0;
};

/// Conjugate gradients on C K C + I with C = diag(mask / sigma).
///
/// Entries of `rhs` at imaginary slots are ignored. `warm_start`, if given, is
/// a previous lifted alpha. Throws ConvergenceError after max_iter iterations.
PosteriorSolve pcg_solve(const KroneckerOperator& K, const NoiseModel& noise, const Eigen::VectorXd& rhs,
                         const PcgOptions& options, const Eigen::VectorXd* warm_start = nullptr);
PosteriorSolve pcg_solve(const KroneckerOperator& K, const NoiseModel& noise, const ObservationSet& y,
                         const PcgOptions& options);

/// Posterior mean K alpha at every grid node.
Eigen::VectorXd predict_mean(const KroneckerOperator& K, const PosteriorSolve& solve);

/// Latent posterior variance k(x,x) - k_*^T (K_M + sigma^2 I)^{-1} k_* at
/// each test node, one solve per node. Negative values within the solver
/// tolerance (relative to the prior variance) are clamped to 0.
Eigen::VectorXd predict_variance(const KroneckerOperator& K, const NoiseModel& noise,
                                 std::span<const std::size_t> test_indices, const PcgOptions& options);

struct MarginalLikelihood {
  double value = 0.0;       ///< -0.5 (model_fit + complexity) - noise_const
  double model_fit = 0.0;   ///< y_M^T alpha_M
  double complexity = 0.0;  ///< sum_{i<=M} log((M/N) lambda_i + sigma^2)
  double noise_const = 0.0; ///< 0.5 M log(2 pi)
  std::size_t clamped = 0;  ///< negative eigenvalues clamped to zero
};

MarginalLikelihood log_marginal_likelihood(const KroneckerOperator& K, const NoiseModel& noise,
                                           const ObservationSet& y, const PcgOptions& options);

struct LmlEvaluation {
  MarginalLikelihood lml;
  Eigen::VectorXd gradient;  ///< over HyperParams::flat(), noise last
  PosteriorSolve solve;
};

/// Approximate log marginal likelihood and its gradient with respect to the
/// raw kernel parameters and log noise variance.
LmlEvaluation lml_and_gradient(const ProductKernel& kernel, const HyperParams& hypers,
                               const ObservationSet& y, const PcgOptions& options,
                               const Eigen::VectorXd* warm_start = nullptr);

MarginalLikelihood log_marginal_likelihood(const ProductKernel& kernel, const HyperParams& hypers,
                                           const ObservationSet& y, const PcgOptions& options);
Eigen::VectorXd ml_gradient(const ProductKernel& kernel, const HyperParams& hypers,
                            const ObservationSet& y, const PcgOptions& options);

KroneckerOperator grid_covariance(const ProductKernel& kernel, const HyperParams& hypers, const Grid& grid);

/// Fitted GP on a (possibly incomplete) grid, ready for prediction.
class GridPosterior {
 public:
  GridPosterior(const ProductKernel& kernel, const HyperParams& hypers, const ObservationSet& y,
                PcgOptions options = {});

  const KroneckerOperator& covariance() const noexcept { return K_; }
  NoiseModel noise() const noexcept { return {sigma_sq_, mask_}; }
  const PosteriorSolve& solve() const noexcept { return solve_; }

  Eigen::VectorXd mean() const { return predict_mean(K_, solve_); }
  Eigen::VectorXd variance(std::span<const std::size_t> test_indices) const {
    return predict_variance(K_, noise(), test_indices, options_);
  }

 private:
  KroneckerOperator K_;
  double sigma_sq_;
  std::vector<std::uint8_t> mask_;
  PcgOptions options_;
  PosteriorSolve solve_;
};

}  // namespace gpatt
