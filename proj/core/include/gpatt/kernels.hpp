#pragma once

#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "gpatt/grid.hpp"

namespace gpatt {

// Closed-form stationary kernels of the lag tau = x - x'. All take
// constrained (positive) parameters and throw ParameterError otherwise.

double k_se(double tau, double lengthscale);
double k_se(std::span<const double> tau, double lengthscale);
double k_matern32(double tau, double lengthscale);
double k_rq(double tau, double lengthscale, double alpha);
double k_periodic(double tau, double omega, double lengthscale);

/// One Gaussian pair +-mean_freq in the spectral density.
struct SMComponent {
  double weight_sq = 1.0;  ///< w^2, signal variance contributed by the component
  double mean_freq = 0.0;  ///< mu, cycles per input unit
  double var_freq = 1.0;   ///< sigma^2, squared frequency units
};

struct SMKernel1D {
  std::vector<SMComponent> components;

  void validate() const;
  double at_zero() const;
};

/// Product over dimensions of one-dimensional spectral mixtures.
struct SMPKernel {
  std::vector<SMKernel1D> per_dim;

  void validate() const;
  std::size_t dims() const noexcept { return per_dim.size(); }
  std::size_t components() const { return per_dim.at(0).components.size(); }
  double at_zero() const;
};

double k_sm_1d(double tau, const SMKernel1D& kernel);
double k_smp(std::span<const double> tau, const SMPKernel& kernel);

/// S(s) = sum_a w_a^2 [N(s; mu_a, sigma_a^2) + N(-s; mu_a, sigma_a^2)] / 2.
double sm_spectral_density(double s, const SMKernel1D& kernel);

/// K[i][j] = k(axis[i] - axis[j]).
template <std::invocable<double> F>
Eigen::MatrixXd gram_1d(F&& kernel, std::span<const double> axis) {
  const auto n = static_cast<Eigen::Index>(axis.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    K(j, j) = kernel(0.0);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = kernel(axis[static_cast<std::size_t>(i)] - axis[static_cast<std::size_t>(j)]);
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

// ---------------------------------------------------------------------------
// Trainable product kernels over raw (unconstrained, log-scale) parameters.

enum class Family { spectral_mixture, squared_exponential, matern32, rational_quadratic };

std::string to_string(Family family);
Family family_from_string(const std::string& name);

enum class ParamKind {
  log_weight_sq,
  log_mean_freq,
  log_var_freq,
  log_lengthscale,
  log_alpha,
  log_signal_var,
  log_noise_var,
};

std::string to_string(ParamKind kind);

struct ParamRole {
  std::size_t dim = 0;
  std::size_t component = 0;
  ParamKind kind = ParamKind::log_lengthscale;

  friend bool operator==(const ParamRole&, const ParamRole&) = default;
};

/// Smallest mean frequency representable when packing to log scale.
inline constexpr double kMinMeanFreq = 1e-8;

/// One factor of a product kernel, parameterized on log scale.
///
/// Raw layouts:
///   spectral_mixture:   [log w^2, log mu, log sigma^2] per component
///   squared_exponential / matern32: [log s^2]? [log l]
///   rational_quadratic: [log s^2]? [log l, log alpha]
/// where the optional log s^2 (signal variance) leads when `with_amplitude`.
class FactorKernel {
 public:
  explicit FactorKernel(Family family, std::size_t components = 1, bool with_amplitude = false);

  Family family() const noexcept { return family_; }
  std::size_t components() const noexcept { return components_; }
  bool has_amplitude() const noexcept { return amplitude_; }
  std::size_t num_params() const noexcept;

  double value(double tau, std::span<const double> raw) const;
  /// d value / d raw, written into `grad` (size num_params()).
  void gradient(double tau, std::span<const double> raw, std::span<double> grad) const;

  Eigen::MatrixXd gram(std::span<const double> axis, std::span<const double> raw) const;
  /// One matrix per raw parameter: elementwise derivative of the gram.
  std::vector<Eigen::MatrixXd> gram_gradients(std::span<const double> axis,
                                              std::span<const double> raw) const;

  std::vector<ParamRole> roles(std::size_t dim) const;

 private:
  Family family_;
  std::size_t components_;
  bool amplitude_;
};

/// Kernel hyperparameters as an unconstrained vector plus log noise variance.
struct HyperParams {
  Eigen::VectorXd raw;
  std::vector<ParamRole> layout;
  double noise_raw = 0.0;

  double noise_var() const;
  /// [raw..., noise_raw], the vector optimized during training.
  Eigen::VectorXd flat() const;
  void set_flat(const Eigen::VectorXd& flat);
};

/// Product over grid axes of trainable one-dimensional factors.
class ProductKernel {
 public:
  explicit ProductKernel(std::vector<FactorKernel> factors);

  /// SMP-A: A spectral-mixture components on each of `dims` axes.
  static ProductKernel smp(std::size_t dims, std::size_t components);
  /// SE, Matern-3/2 or RQ product with a single signal variance on axis 0.
  static ProductKernel baseline(Family family, std::size_t dims);

  /// {"type":"smp","P":2,"A":30} or {"type":"se"|"matern32"|"rq","P":2}.
  /// A missing "P" is filled from `dims_hint`.
  static ProductKernel from_json(const nlohmann::json& spec, std::size_t dims_hint = 0);
  nlohmann::json to_json() const;

  std::size_t dims() const noexcept { return factors_.size(); }
  const FactorKernel& factor(std::size_t p) const { return factors_.at(p); }
  std::size_t num_params() const noexcept { return offsets_.back(); }
  std::size_t offset(std::size_t p) const { return offsets_.at(p); }
  std::span<const double> factor_params(const HyperParams& h, std::size_t p) const;

  std::vector<ParamRole> layout() const;
  HyperParams make_hypers(Eigen::VectorXd raw, double noise_var) const;

  double value(std::span<const double> tau, const HyperParams& h) const;
  double at_zero(const HyperParams& h) const;
  /// One gram per grid axis.
  std::vector<Eigen::MatrixXd> grams(const Grid& grid, const HyperParams& h) const;

  friend bool operator==(const ProductKernel& a, const ProductKernel& b);

 private:
  std::vector<FactorKernel> factors_;
  std::vector<std::size_t> offsets_;
};

/// Constrained -> raw, flooring mean frequencies at kMinMeanFreq.
HyperParams pack_smp(const SMPKernel& kernel, double noise_var);
SMPKernel unpack_smp(const ProductKernel& kernel, const HyperParams& h);
SMKernel1D unpack_sm(const FactorKernel& factor, std::span<const double> raw);

nlohmann::json hypers_to_json(const ProductKernel& kernel, const HyperParams& h);
HyperParams hypers_from_json(const ProductKernel& kernel, const nlohmann::json& doc);

}  // namespace gpatt
