#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gpatt/grid.hpp"
#include "gpatt/inference.hpp"
#include "gpatt/kernels.hpp"
#include "gpatt/optimizer.hpp"

namespace gpatt {

struct TrainConfig {
  Family family = Family::spectral_mixture;
  std::size_t A = 10;                  ///< spectral-mixture components per dimension
  std::size_t restarts = 3;
  std::size_t max_opt_iter = 200;
  double opt_tol = 1e-5;               ///< gradient max-norm
  std::uint64_t seed = 0;
  double pcg_tol = 1e-6;
  std::size_t pcg_max_iter = 1000;
  std::size_t predict_max_iter = 20000;  ///< cold-started posterior and variance solves
  std::size_t variance_budget = 5000;  ///< max test points for predictive variances
  double lengthscale_mean_factor = 1.0;  ///< mean of 1/sigma_a draws, in units of axis range
  double prune_threshold = 1e-4;       ///< relative w^2 below which a component counts as pruned

  void validate() const;
  ProductKernel kernel(std::size_t dims) const;
  PcgOptions pcg() const { return {pcg_tol, pcg_max_iter, nullptr}; }
  PcgOptions predict_pcg() const { return {pcg_tol, predict_max_iter, nullptr}; }

  static TrainConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

/// Spectral-mixture initialization on every axis:
///   mu ~ U(0, nyquist), 1/sigma ~ N+(r, r/2) with r = factor * axis range,
///   w = std(y_M)^(1/P) / A, noise = 0.1 var(y_M).
HyperParams initialize(const ObservationSet& y, std::size_t A, std::mt19937_64& rng,
                       double lengthscale_mean_factor = 1.0);

/// Initialization for any product kernel. SE / Matern / RQ take signal
/// variance var(y_M), RQ alpha = 1, and lengthscales l_p = d_p (f r_p / d_p)^u
/// with d_p the median spacing and u ~ U(stratum, stratum + 1) / strata shared
/// across axes, so restarts cover short and long lengthscales.
HyperParams initialize(const ProductKernel& kernel, const ObservationSet& y, std::mt19937_64& rng,
                       double lengthscale_mean_factor = 1.0, std::size_t stratum = 0, std::size_t strata = 1);

struct RestartSummary {
  double initial_lml = 0.0;
  double final_lml = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  std::string status;
  bool failed = false;
  std::string error;
};

struct TrainReport {
  ProductKernel kernel = ProductKernel::smp(1, 1);
  HyperParams final_hypers;
  double final_lml = 0.0;
  double final_grad_norm = 0.0;   ///< max |g| at final_hypers
  bool converged = false;
  std::vector<double> lml_trace;  ///< accepted steps of the selected restart
  std::vector<std::vector<std::size_t>> pruned_components;
  std::vector<RestartSummary> restarts;
  double wallclock = 0.0;         ///< seconds

  nlohmann::json to_json() const;
  static TrainReport from_json(const nlohmann::json& doc);
};

/// Per-dimension components whose w^2 is below threshold * max_a w^2.
std::vector<std::vector<std::size_t>> pruned_components(const ProductKernel& kernel, const HyperParams& h,
                                                        double threshold);

/// Runs BFGS on -log p(y | theta) from `restarts` initializations and keeps the best.
TrainReport train(const ObservationSet& y, const TrainConfig& config);

/// Continues optimization from given hyperparameters (single run, no restarts).
TrainReport refine(const ObservationSet& y, const TrainConfig& config, const ProductKernel& kernel,
                   const HyperParams& start);

}  // namespace gpatt
