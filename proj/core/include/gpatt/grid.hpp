#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace gpatt {

/// Cartesian product of P strictly increasing coordinate axes.
///
/// Nodes are flattened column-major: axis 0 varies fastest. This is the
/// `reshape` convention of the Kronecker routines, where the *last*
/// Kronecker factor acts on the fastest index, so axis p of a grid pairs with
/// Kronecker factor P-1-p (see KroneckerOperator::from_axis_factors).
class Grid {
 public:
  explicit Grid(std::vector<std::vector<double>> axes);

  std::size_t dims() const noexcept { return axes_.size(); }
  std::size_t size() const noexcept { return size_; }
  const std::vector<double>& axis(std::size_t p) const { return axes_.at(p); }
  const std::vector<std::vector<double>>& axes() const noexcept { return axes_; }
  const std::vector<std::size_t>& shape() const noexcept { return shape_; }

  std::size_t linear_index(std::span<const std::size_t> multi_index) const;
  std::vector<std::size_t> multi_index(std::size_t linear) const;

  /// Coordinates of the node at `linear`.
  std::vector<double> point(std::size_t linear) const;

  /// Half the sampling rate of axis p, using its median spacing.
  double nyquist(std::size_t p) const;
  double range(std::size_t p) const { return axes_[p].back() - axes_[p].front(); }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::vector<std::vector<double>> axes_;
  std::vector<std::size_t> shape_;
  std::size_t size_ = 0;
};

/// Grid with axes {origin, origin + spacing, ...} of the given lengths.
Grid regular_grid(std::span<const std::size_t> shape, double spacing = 1.0, double origin = 0.0);

/// Grid-aligned targets with a real/imaginary partition.
///
/// Imaginary slots carry the literal value 0 and are never read as data.
class ObservationSet {
 public:
  ObservationSet(Grid grid, Eigen::VectorXd values, std::vector<std::uint8_t> mask);

  /// Every node observed.
  static ObservationSet full(Grid grid, Eigen::VectorXd values);

  const Grid& grid() const noexcept { return grid_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  const std::vector<std::uint8_t>& mask() const noexcept { return mask_; }
  bool observed(std::size_t i) const { return mask_[i] != 0; }

  std::size_t size() const noexcept { return mask_.size(); }
  std::size_t num_observed() const noexcept { return observed_.size(); }
  std::size_t num_imaginary() const noexcept { return size() - num_observed(); }

  /// Linear indices of real observations, ascending.
  const std::vector<std::size_t>& observed_indices() const noexcept { return observed_; }
  /// y_M in ascending index order.
  Eigen::VectorXd observed_values() const;

 private:
  Grid grid_;
  Eigen::VectorXd values_;
  std::vector<std::uint8_t> mask_;
  std::vector<std::size_t> observed_;
};

/// Places scattered observations on the smallest enclosing grid.
///
/// `points` holds one row per observation. Axes default to the sorted unique
/// coordinates of each column; explicit axes may be supplied to densify.
ObservationSet complete_grid(const Eigen::MatrixXd& points, std::span<const double> targets,
                             std::optional<std::vector<std::vector<double>>> axes = std::nullopt);

}  // namespace gpatt
