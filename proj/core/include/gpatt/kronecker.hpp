#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace gpatt {

/// (K^1 (x) ... (x) K^P) u by the reshape / multiply / transpose recursion.
///
/// Factors are square but otherwise arbitrary. The last factor acts on the
/// fastest-varying index of `u`. Cost O(N * sum_p n_p).
Eigen::VectorXd kron_mvprod(std::span<const Eigen::MatrixXd> factors, const Eigen::VectorXd& u);

/// Multiplies mode `mode` of the tensor `x` by `A` (n_mode x n_mode).
/// `shape` is in Kronecker order: entry 0 is the slowest index.
Eigen::VectorXd mode_product(std::span<const std::size_t> shape, std::size_t mode,
                             const Eigen::MatrixXd& A, const Eigen::VectorXd& x);

/// G[i][j] = sum over all other indices of x[.., i, ..] * y[.., j, ..] along `mode`.
Eigen::MatrixXd mode_contraction(std::span<const std::size_t> shape, std::size_t mode,
                                 const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Symmetric Kronecker matrix K = K^1 (x) ... (x) K^P, never materialized.
class KroneckerOperator {
 public:
  /// Factors in Kronecker order (first factor = slowest index).
  explicit KroneckerOperator(std::vector<Eigen::MatrixXd> factors);

  /// Builds the operator for a grid from one factor per grid axis. Grid axis 0
  /// is the fastest index, so it becomes the last Kronecker factor.
  static KroneckerOperator from_axis_factors(std::vector<Eigen::MatrixXd> by_axis);

  std::size_t num_factors() const noexcept { return factors_.size(); }
  std::size_t size() const noexcept { return size_; }
  const std::vector<Eigen::MatrixXd>& factors() const noexcept { return factors_; }
  const Eigen::MatrixXd& axis_factor(std::size_t axis) const {
    return factors_.at(factors_.size() - 1 - axis);
  }
  /// Factor sizes in Kronecker order.
  const std::vector<std::size_t>& shape() const noexcept { return shape_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;
  /// K e_j, formed as a Kronecker product of factor columns.
  Eigen::VectorXd column(std::size_t j) const;
  double diagonal(std::size_t j) const;

  /// Dense N x N matrix. Intended for small diagnostics and tests only.
  Eigen::MatrixXd dense() const;

 private:
  std::vector<Eigen::MatrixXd> factors_;
  std::vector<std::size_t> shape_;
  std::size_t size_ = 1;
};

/// Per-factor eigendecompositions K^p = Q^p V^p Q^p^T, in Kronecker order.
struct EigenSystem {
  std::vector<Eigen::MatrixXd> vectors;
  std::vector<Eigen::VectorXd> values;

  std::size_t size() const;
  std::vector<std::size_t> shape() const;
  /// All N products prod_p V^p[i_p], in linear (Kronecker) index order.
  Eigen::VectorXd merged() const;
  /// Number of negative merged eigenvalues, i.e. clamp events.
  std::size_t negative_count() const;
};

EigenSystem eigendecompose(const KroneckerOperator& op);

/// (K + sigma^2 I)^{-1} y = Q (V + sigma^2 I)^{-1} Q^T y for a complete grid.
Eigen::VectorXd apply_inverse_full_grid(const EigenSystem& eig, double noise_var,
                                        const Eigen::VectorXd& y);

/// sum_i log(max(lambda_i, 0) + sigma^2), streamed over the eigenvalue lattice.
double log_det_full_grid(const EigenSystem& eig, double noise_var);

/// The `count` largest merged eigenvalues (negatives clamped to 0), descending.
struct TopEigenvalues {
  std::vector<std::size_t> indices;  ///< linear Kronecker indices
  Eigen::VectorXd values;
};

/// Uses full enumeration plus selection when N <= enumeration_limit and a
/// best-first walk over the sorted factor lattice otherwise.
TopEigenvalues top_eigenvalues(const EigenSystem& eig, std::size_t count,
                               std::size_t enumeration_limit = 1'000'000);

}  // namespace gpatt
