#include "gpatt/texture.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace gpatt::cli {

Eigen::VectorXd quasi_periodic_texture(std::size_t width, std::size_t height, std::uint64_t seed,
                                       double noise_std) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::VectorXd v(static_cast<Eigen::Index>(width * height));
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = static_cast<double>(x), fy = static_cast<double>(y);
      const double base = std::cos(two_pi * fx / 8.0) * std::cos(two_pi * fy / 8.0) +
                          0.6 * std::cos(two_pi * fx / 5.3 + 0.4) * std::cos(two_pi * fy / 11.0 + 1.1) +
                          0.3 * std::cos(two_pi * fx / 13.0);
      v[static_cast<Eigen::Index>(y * width + x)] = base + noise_std * noise(rng);
    }
  }
  return v;
}

}  // namespace gpatt::cli
