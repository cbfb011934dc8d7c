// Dense reference implementations used to check the structured code paths.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gpatt/grid.hpp"
#include "gpatt/kernels.hpp"

namespace oracle {

/// Explicit Kronecker product; the first factor owns the slowest index.
inline Eigen::MatrixXd dense_kron(std::span<const Eigen::MatrixXd> factors) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Ones(1, 1);
  for (const auto& f : factors) {
    Eigen::MatrixXd next(out.rows() * f.rows(), out.cols() * f.cols());
    for (Eigen::Index i = 0; i < out.rows(); ++i)
      for (Eigen::Index j = 0; j < out.cols(); ++j)
        next.block(i * f.rows(), j * f.cols(), f.rows(), f.cols()) = out(i, j) * f;
    out = std::move(next);
  }
  return out;
}

/// Covariance over grid nodes built point by point from a product kernel.
inline Eigen::MatrixXd dense_grid_covariance(const gpatt::ProductKernel& kernel, const gpatt::HyperParams& h,
                                             const gpatt::Grid& grid) {
  const auto N = static_cast<Eigen::Index>(grid.size());
  std::vector<std::vector<double>> pts;
  for (Eigen::Index i = 0; i < N; ++i) pts.push_back(grid.point(static_cast<std::size_t>(i)));
  Eigen::MatrixXd K(N, N);
  std::vector<double> tau(grid.dims());
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < N; ++j) {
      for (std::size_t p = 0; p < grid.dims(); ++p) tau[p] = pts[i][p] - pts[j][p];
      K(i, j) = kernel.value(tau, h);
    }
  return K;
}

/// Exact GP on the observed subset only, by Cholesky.
struct DenseGp {
  Eigen::VectorXd mean;      ///< at every node
  Eigen::VectorXd variance;  ///< latent, at every node
  double lml = 0.0;
};

inline DenseGp dense_gp(const Eigen::MatrixXd& K, double sigma_sq, std::span<const std::uint8_t> mask,
                        const Eigen::VectorXd& values) {
  std::vector<Eigen::Index> obs;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) obs.push_back(static_cast<Eigen::Index>(i));
  const auto M = static_cast<Eigen::Index>(obs.size());
  const auto N = K.rows();
  Eigen::MatrixXd KM(M, M), KxM(N, M);
  Eigen::VectorXd y(M);
  for (Eigen::Index a = 0; a < M; ++a) {
    y[a] = values[obs[a]];
    for (Eigen::Index b = 0; b < M; ++b) KM(a, b) = K(obs[a], obs[b]);
    for (Eigen::Index i = 0; i < N; ++i) KxM(i, a) = K(i, obs[a]);
  }
  KM.diagonal().array() += sigma_sq;
  Eigen::LLT<Eigen::MatrixXd> llt(KM);
  const Eigen::VectorXd alpha = llt.solve(y);
  DenseGp out;
  out.mean = KxM * alpha;
  const Eigen::MatrixXd V = llt.matrixL().solve(KxM.transpose());
  out.variance = K.diagonal() - V.colwise().squaredNorm().transpose();
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  out.lml = -0.5 * y.dot(alpha) - 0.5 * logdet - 0.5 * static_cast<double>(M) * std::log(2.0 * std::numbers::pi);
  return out;
}

/// k(tau) = integral over the real line of S(s) cos(2 pi s tau), by adaptive Gauss-Kronrod.
inline double bochner_inverse(const gpatt::SMKernel1D& k, double tau) {
  double hi = 0.0;
  for (const auto& c : k.components) hi = std::max(hi, c.mean_freq + 14.0 * std::sqrt(c.var_freq));
  auto f = [&](double s) { return gpatt::sm_spectral_density(s, k) * std::cos(2.0 * std::numbers::pi * s * tau); };
  // Even integrand: integrate [0, hi] in pieces short enough to resolve the oscillation.
  const double period = tau != 0.0 ? 1.0 / std::abs(tau) : hi;
  const int pieces = std::max(1, static_cast<int>(std::ceil(hi / (0.5 * period))));
  double total = 0.0;
  for (int i = 0; i < pieces; ++i) {
    const double a = hi * i / pieces, b = hi * (i + 1) / pieces;
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 12, 1e-13);
  }
  return 2.0 * total;
}

/// Integral of g over [a, b] by adaptive Gauss-Kronrod.
inline double integrate(const std::function<double(double)>& g, double a, double b, int pieces = 64) {
  double total = 0.0;
  for (int i = 0; i < pieces; ++i) {
    const double lo = a + (b - a) * i / pieces, hi = a + (b - a) * (i + 1) / pieces;
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, lo, hi, 12, 1e-13);
  }
  return total;
}

/// Central differences of f at x.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline Eigen::MatrixXd random_spd(Eigen::Index n, std::mt19937_64& rng, double jitter = 0.5) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd B(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) B(i, j) = normal(rng);
  Eigen::MatrixXd S = B * B.transpose() / static_cast<double>(n);
  S.diagonal().array() += jitter;
  return S;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

}  // namespace oracle
