#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

namespace gpatt::cli {

/// Quasi-periodic synthetic texture on a width x height pixel grid, in grid
/// order. Two incommensurate product-of-cosine patterns plus a slow ripple
/// and i.i.d. Gaussian noise of standard deviation `noise_std`.
Eigen::VectorXd quasi_periodic_texture(std::size_t width, std::size_t height, std::uint64_t seed,
                                       double noise_std = 0.05);

}  // namespace gpatt::cli
