#include "gpatt/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gpatt/errors.hpp"

namespace gpatt {

Grid::Grid(std::vector<std::vector<double>> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) throw ShapeError("grid needs at least one axis");
  size_ = 1;
  shape_.reserve(axes_.size());
  for (std::size_t p = 0; p < axes_.size(); ++p) {
    const auto& ax = axes_[p];
    if (ax.size() < 2) {
      throw ShapeError("grid axis " + std::to_string(p) + " needs at least two coordinates");
    }
    for (std::size_t i = 0; i < ax.size(); ++i) {
      if (!std::isfinite(ax[i])) throw ShapeError("grid axis has a non-finite coordinate");
      if (i > 0 && !(ax[i] > ax[i - 1])) {
        throw ShapeError("grid axis " + std::to_string(p) + " is not strictly increasing");
      }
    }
    if (size_ > std::numeric_limits<std::size_t>::max() / ax.size()) {
      throw ShapeError("grid size overflows");
    }
    size_ *= ax.size();
    shape_.push_back(ax.size());
  }
}

std::size_t Grid::linear_index(std::span<const std::size_t> multi_index) const {
  if (multi_index.size() != dims()) throw ShapeError("multi-index has wrong length");
  std::size_t linear = 0;
  std::size_t stride = 1;
  for (std::size_t p = 0; p < dims(); ++p) {
    if (multi_index[p] >= shape_[p]) {
      std::ostringstream msg;
      msg << "index " << multi_index[p] << " out of range for axis " << p << " of length "
          << shape_[p];
      throw BoundsError(msg.str());
    }
    linear += multi_index[p] * stride;
    stride *= shape_[p];
  }
  return linear;
}

std::vector<std::size_t> Grid::multi_index(std::size_t linear) const {
  if (linear >= size_) throw BoundsError("linear index out of range");
  std::vector<std::size_t> out(dims());
  for (std::size_t p = 0; p < dims(); ++p) {
    out[p] = linear % shape_[p];
    linear /= shape_[p];
  }
  return out;
}

std::vector<double> Grid::point(std::size_t linear) const {
  const auto idx = multi_index(linear);
  std::vector<double> x(dims());
  for (std::size_t p = 0; p < dims(); ++p) x[p] = axes_[p][idx[p]];
  return x;
}

double Grid::nyquist(std::size_t p) const {
  const auto& ax = axes_.at(p);
  std::vector<double> spacing(ax.size() - 1);
  for (std::size_t i = 0; i + 1 < ax.size(); ++i) spacing[i] = ax[i + 1] - ax[i];
  const auto mid = spacing.begin() + static_cast<std::ptrdiff_t>(spacing.size() / 2);
  std::nth_element(spacing.begin(), mid, spacing.end());
  double median = *mid;
  if (spacing.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(spacing.begin(), mid));
  }
  return 0.5 / median;
}

Grid regular_grid(std::span<const std::size_t> shape, double spacing, double origin) {
  std::vector<std::vector<double>> axes;
  axes.reserve(shape.size());
  for (std::size_t n : shape) {
    std::vector<double> ax(n);
    for (std::size_t i = 0; i < n; ++i) ax[i] = origin + spacing * static_cast<double>(i);
    axes.push_back(std::move(ax));
  }
  return Grid(std::move(axes));
}

ObservationSet::ObservationSet(Grid grid, Eigen::VectorXd values, std::vector<std::uint8_t> mask)
    : grid_(std::move(grid)), values_(std::move(values)), mask_(std::move(mask)) {
  if (static_cast<std::size_t>(values_.size()) != grid_.size() || mask_.size() != grid_.size()) {
    throw ShapeError("observation values and mask must match the grid size");
  }
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    if (mask_[i]) {
      mask_[i] = 1;
      observed_.push_back(i);
    } else {
      values_[static_cast<Eigen::Index>(i)] = 0.0;
    }
  }
  if (observed_.empty()) throw ShapeError("observation set has no real observations");
}

ObservationSet ObservationSet::full(Grid grid, Eigen::VectorXd values) {
  std::vector<std::uint8_t> mask(grid.size(), 1);
  return ObservationSet(std::move(grid), std::move(values), std::move(mask));
}

Eigen::VectorXd ObservationSet::observed_values() const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(observed_.size()));
  for (std::size_t k = 0; k < observed_.size(); ++k) {
    y[static_cast<Eigen::Index>(k)] = values_[static_cast<Eigen::Index>(observed_[k])];
  }
  return y;
}

namespace {

std::size_t locate(const std::vector<double>& axis, double v, std::size_t dim) {
  const double tol = 1e-9 * (1.0 + std::abs(v));
  auto it = std::lower_bound(axis.begin(), axis.end(), v - tol);
  if (it == axis.end() || std::abs(*it - v) > tol) {
    std::ostringstream msg;
    msg << "coordinate " << v << " is not on axis " << dim;
    throw OffGridError(msg.str());
  }
  return static_cast<std::size_t>(it - axis.begin());
}

}  // namespace

ObservationSet complete_grid(const Eigen::MatrixXd& points, std::span<const double> targets,
                             std::optional<std::vector<std::vector<double>>> axes) {
  const auto count = static_cast<std::size_t>(points.rows());
  const auto dims = static_cast<std::size_t>(points.cols());
  if (count != targets.size()) throw ShapeError("points and targets differ in length");
  if (count == 0 || dims == 0) throw ShapeError("no points supplied");

  if (!axes) {
    axes.emplace(dims);
    for (std::size_t p = 0; p < dims; ++p) {
      auto& ax = (*axes)[p];
      ax.assign(points.col(static_cast<Eigen::Index>(p)).begin(),
                points.col(static_cast<Eigen::Index>(p)).end());
      std::sort(ax.begin(), ax.end());
      ax.erase(std::unique(ax.begin(), ax.end()), ax.end());
    }
  } else if (axes->size() != dims) {
    throw ShapeError("explicit axes do not match point dimension");
  }

  Grid grid(std::move(*axes));
  Eigen::VectorXd values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  std::vector<std::uint8_t> mask(grid.size(), 0);
  std::vector<std::size_t> idx(dims);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t p = 0; p < dims; ++p) {
      idx[p] = locate(grid.axis(p), points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)), p);
    }
    const std::size_t lin = grid.linear_index(idx);
    if (mask[lin]) throw DuplicateError("duplicate point at grid node " + std::to_string(lin));
    mask[lin] = 1;
    values[static_cast<Eigen::Index>(lin)] = targets[i];
  }
  return ObservationSet(std::move(grid), std::move(values), std::move(mask));
}

}  // namespace gpatt
