#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "gpatt/grid.hpp"
#include "gpatt/inference.hpp"
#include "gpatt/kernel_expr.hpp"
#include "gpatt/kernels.hpp"
#include "gpatt/kronecker.hpp"

namespace gpatt {

/// Standardized mean squared error: MSE over the variance of the test targets.
double smse(const Eigen::VectorXd& pred_mean, const Eigen::VectorXd& targets);

/// Mean standardized log loss against N(train_mean, train_var). `pred_var` is
/// the full predictive variance (noise included).
double msll(const Eigen::VectorXd& pred_mean, const Eigen::VectorXd& pred_var, const Eigen::VectorXd& targets,
            double train_mean, double train_var);

struct MetricReport {
  double smse = 0.0;
  double msll = 0.0;
  std::size_t n_test = 0;
  bool variance_subsampled = false;

  nlohmann::json to_json() const;
};

/// Scores a fitted posterior on held-out grid nodes.
///
/// SMSE uses every test node. MSLL needs one solve per node, so when there are
/// more than `variance_budget` test nodes a fixed-seed subsample is used.
MetricReport evaluate_holdout(const GridPosterior& posterior, const Eigen::VectorXd& truth,
                              std::span<const std::size_t> test_indices, double train_mean, double train_var,
                              std::size_t variance_budget = 5000, std::uint64_t seed = 0);

/// Draw from N(0, K + sigma^2 I) using the symmetric square root of each factor.
Eigen::VectorXd sample_kronecker_gp(const KroneckerOperator& K, double noise_var, std::mt19937_64& rng);

/// Full-grid draw with k(x, x') = prod_p k_p(x_p - x'_p).
ObservationSet sample_grid_gp(const std::vector<KernelExpr>& per_axis, const Grid& grid, double noise_var,
                              std::mt19937_64& rng);

/// Normalized kernel curves k(tau) / k(0) along one dimension.
struct KernelSlice {
  std::size_t dim = 0;
  std::vector<double> taus;
  std::optional<std::vector<double>> true_values;
  std::vector<double> learned_values;

  nlohmann::json to_json() const;
  void write_csv(std::ostream& out) const;
};

struct RecoveryComparison {
  std::vector<KernelSlice> slices;
  std::vector<double> discrepancy;  ///< max_tau |learned - true| per dimension
};

RecoveryComparison kernel_recovery_compare(const std::vector<KernelExpr>& truth,
                                           const std::vector<KernelExpr>& learned,
                                           const std::vector<std::vector<double>>& taus);
RecoveryComparison kernel_recovery_compare(const std::vector<KernelExpr>& truth, const SMPKernel& learned,
                                           const std::vector<std::vector<double>>& taus);

/// Per-dimension slice of a learned product kernel, without a reference curve.
KernelSlice learned_slice(const ProductKernel& kernel, const HyperParams& h, std::size_t dim,
                          std::vector<double> taus);

/// log S(s) on the given frequencies, floored at log(1e-300).
Eigen::VectorXd export_spectrum(const SMKernel1D& kernel, std::span<const double> freqs);

}  // namespace gpatt
