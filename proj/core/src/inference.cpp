#include "gpatt/inference.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include <nlohmann/json.hpp>

#include "gpatt/errors.hpp"

namespace gpatt {

namespace {

Eigen::VectorXd scaling(const NoiseModel& noise, std::size_t n) {
  if (!(noise.sigma_sq > 0.0) || !std::isfinite(noise.sigma_sq)) {
    throw ParameterError("noise variance must be positive and finite");
  }
  if (noise.mask.size() != n) throw ShapeError("noise mask does not match the operator size");
  const double inv_sigma = 1.0 / std::sqrt(noise.sigma_sq);
  Eigen::VectorXd c(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) c[static_cast<Eigen::Index>(i)] = noise.mask[i] ? inv_sigma : 0.0;
  return c;
}

void emit(const PcgOptions& options, const nlohmann::json& record) {
  if (options.diagnostics) *options.diagnostics << record.dump() << '\n';
}

}  // namespace

PosteriorSolve pcg_solve(const KroneckerOperator& K, const NoiseModel& noise, const Eigen::VectorXd& rhs,
                         const PcgOptions& options, const Eigen::VectorXd* warm_start) {
  if (!(options.tol > 0.0)) throw ParameterError("PCG tolerance must be positive");
  const std::size_t n = K.size();
  if (static_cast<std::size_t>(rhs.size()) != n) throw ShapeError("right-hand side does not match the operator");
  const Eigen::VectorXd c = scaling(noise, n);

  // Scaled system (C K C + I) z = C y, alpha = C z.
  auto apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    Eigen::VectorXd w = K.apply(c.cwiseProduct(v));
    return c.cwiseProduct(w) + v;
  };

  PosteriorSolve out;
  const Eigen::VectorXd b = c.cwiseProduct(rhs);
  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    out.alpha = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    return out;
  }

  Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd r = b;
  if (warm_start && warm_start->size() == b.size()) {
    const double sigma = std::sqrt(noise.sigma_sq);
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = c[i] != 0.0 ? sigma * (*warm_start)[i] : 0.0;
    r = b - apply(z);
  }
  Eigen::VectorXd p = r;
  double rs = r.squaredNorm();
  double rel = std::sqrt(rs) / b_norm;
  out.residual_history.push_back(rel);

  while (rel > options.tol) {
    if (out.iterations >= options.max_iter) {
      emit(options, {{"event", "pcg_not_converged"}, {"iterations", out.iterations}, {"residual", rel}});
      throw ConvergenceError("PCG did not converge in " + std::to_string(options.max_iter) +
                                 " iterations (residual " + std::to_string(rel) + ")",
                             std::move(out.residual_history));
    }
    const Eigen::VectorXd Ap = apply(p);
    const double step = rs / p.dot(Ap);
    z.noalias() += step * p;
    r.noalias() -= step * Ap;
    const double rs_next = r.squaredNorm();
    p = r + (rs_next / rs) * p;
    rs = rs_next;
    rel = std::sqrt(rs) / b_norm;
    ++out.iterations;
    out.residual_history.push_back(rel);
  }
  out.final_residual = rel;
  out.alpha = c.cwiseProduct(z);
  // 2 b.z - z.Bz with Bz = b - r.
  out.quadratic_form = b.dot(z) + r.dot(z);
  emit(options, {{"event", "pcg"}, {"iterations", out.iterations}, {"residual", rel}});
  return out;
}

PosteriorSolve pcg_solve(const KroneckerOperator& K, const NoiseModel& noise, const ObservationSet& y,
                         const PcgOptions& options) {
  return pcg_solve(K, noise, y.values(), options);
}

Eigen::VectorXd predict_mean(const KroneckerOperator& K, const PosteriorSolve& solve) {
  return K.apply(solve.alpha);
}

Eigen::VectorXd predict_variance(const KroneckerOperator& K, const NoiseModel& noise,
                                 std::span<const std::size_t> test_indices, const PcgOptions& options) {
  Eigen::VectorXd var(static_cast<Eigen::Index>(test_indices.size()));
  for (std::size_t t = 0; t < test_indices.size(); ++t) {
    const std::size_t j = test_indices[t];
    const Eigen::VectorXd k_star = K.column(j);
    const PosteriorSolve s = pcg_solve(K, noise, k_star, options);
    const double prior = K.diagonal(j);
    double v = prior - s.quadratic_form;
    if (v < 0.0) {
      if (v < -std::max(1e-8, options.tol) * prior) {
        throw NumericalError("negative predictive variance " + std::to_string(v) + " at node " +
                             std::to_string(j));
      }
      v = 0.0;
    }
    var[static_cast<Eigen::Index>(t)] = v;
  }
  return var;
}

namespace {

struct Complexity {
  double value = 0.0;
  double noise_derivative = 0.0;  // d/d sigma^2
  TopEigenvalues top;
};

Complexity approximate_log_det(const EigenSystem& eig, std::size_t observed, double sigma_sq) {
  Complexity c;
  const double ratio = static_cast<double>(observed) / static_cast<double>(eig.size());
  c.top = top_eigenvalues(eig, observed);
  for (Eigen::Index i = 0; i < c.top.values.size(); ++i) {
    const double d = ratio * c.top.values[i] + sigma_sq;
    c.value += std::log(d);
    c.noise_derivative += 1.0 / d;
  }
  if (!std::isfinite(c.value)) throw NumericalError("complexity penalty is not finite");
  return c;
}

MarginalLikelihood assemble(double fit, const Complexity& c, std::size_t observed, std::size_t clamped) {
  MarginalLikelihood ml;
  ml.model_fit = fit;
  ml.complexity = c.value;
  ml.noise_const = 0.5 * static_cast<double>(observed) * std::log(2.0 * std::numbers::pi);
  ml.value = -0.5 * (fit + c.value) - ml.noise_const;
  ml.clamped = clamped;
  return ml;
}

// Complete grids are solved directly in the eigenbasis; PCG handles the rest.
PosteriorSolve solve_training_system(const KroneckerOperator& K, const EigenSystem& eig, const NoiseModel& noise,
                                     const ObservationSet& y, const PcgOptions& options,
                                     const Eigen::VectorXd* warm_start) {
  if (y.num_imaginary() != 0) return pcg_solve(K, noise, y.values(), options, warm_start);
  PosteriorSolve out;
  out.alpha = apply_inverse_full_grid(eig, noise.sigma_sq, y.values());
  out.quadratic_form = y.values().dot(out.alpha);
  emit(options, {{"event", "eigen_solve"}, {"size", y.size()}});
  return out;
}

}  // namespace

MarginalLikelihood log_marginal_likelihood(const KroneckerOperator& K, const NoiseModel& noise,
                                           const ObservationSet& y, const PcgOptions& options) {
  if (K.size() != y.size()) throw ShapeError("operator does not match the observation grid");
  const EigenSystem eig = eigendecompose(K);
  const PosteriorSolve solve = solve_training_system(K, eig, noise, y, options, nullptr);
  const double fit = solve.quadratic_form;
  const Complexity c = approximate_log_det(eig, y.num_observed(), noise.sigma_sq);
  return assemble(fit, c, y.num_observed(), eig.negative_count());
}

KroneckerOperator grid_covariance(const ProductKernel& kernel, const HyperParams& hypers, const Grid& grid) {
  return KroneckerOperator::from_axis_factors(kernel.grams(grid, hypers));
}

LmlEvaluation lml_and_gradient(const ProductKernel& kernel, const HyperParams& hypers,
                               const ObservationSet& y, const PcgOptions& options,
                               const Eigen::VectorXd* warm_start) {
  const Grid& grid = y.grid();
  const std::size_t P = grid.dims();
  if (kernel.dims() != P) throw ShapeError("kernel dimension does not match the grid");
  const double sigma_sq = hypers.noise_var();
  const KroneckerOperator K = grid_covariance(kernel, hypers, grid);
  const EigenSystem eig = eigendecompose(K);
  const NoiseModel noise{sigma_sq, y.mask()};

  LmlEvaluation out;
  out.solve = solve_training_system(K, eig, noise, y, options, warm_start);
  const Eigen::VectorXd& alpha = out.solve.alpha;
  const double fit = out.solve.quadratic_form;
  const std::size_t M = y.num_observed();
  const Complexity c = approximate_log_det(eig, M, sigma_sq);
  out.lml = assemble(fit, c, M, eig.negative_count());
  if (!std::isfinite(out.lml.value)) throw NumericalError("log marginal likelihood is not finite");

  const double ratio = static_cast<double>(M) / static_cast<double>(y.size());
  const auto& shape = K.shape();

  // Per-factor eigenvalue weights: h_k[j] = sum over selected i with i_k = j of
  // ratio / (ratio lambda_i + sigma^2) * prod_{l != k} lambda^l_{i_l}.
  std::vector<Eigen::VectorXd> h(P);
  for (std::size_t k = 0; k < P; ++k) h[k] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(shape[k]));
  std::vector<Eigen::Index> idx(P);
  for (std::size_t t = 0; t < c.top.indices.size(); ++t) {
    const double lambda = c.top.values[static_cast<Eigen::Index>(t)];
    std::size_t lin = c.top.indices[t];
    for (std::size_t k = P; k-- > 0;) {
      idx[k] = static_cast<Eigen::Index>(lin % shape[k]);
      lin /= shape[k];
    }
    double raw_product = 1.0;
    for (std::size_t k = 0; k < P; ++k) raw_product *= eig.values[k][idx[k]];
    if (raw_product < 0.0) continue;  // clamped: zero derivative
    const double weight = ratio / (ratio * lambda + sigma_sq);
    for (std::size_t k = 0; k < P; ++k) {
      double others = 1.0;
      for (std::size_t l = 0; l < P; ++l) {
        if (l != k) others *= eig.values[l][idx[l]];
      }
      h[k][idx[k]] += weight * others;
    }
  }

  out.gradient.resize(static_cast<Eigen::Index>(kernel.num_params() + 1));
  for (std::size_t axis = 0; axis < P; ++axis) {
    const std::size_t mode = P - 1 - axis;
    Eigen::VectorXd others = alpha;
    for (std::size_t l = 0; l < P; ++l) {
      if (l != mode) others = mode_product(shape, l, K.factors()[l], others);
    }
    const Eigen::MatrixXd fit_part = mode_contraction(shape, mode, alpha, others);
    const Eigen::MatrixXd det_part =
        eig.vectors[mode] * h[mode].asDiagonal() * eig.vectors[mode].transpose();
    const Eigen::MatrixXd weight = 0.5 * (fit_part - det_part);

    const auto& factor = kernel.factor(axis);
    const auto dK = factor.gram_gradients(grid.axis(axis), kernel.factor_params(hypers, axis));
    for (std::size_t q = 0; q < dK.size(); ++q) {
      out.gradient[static_cast<Eigen::Index>(kernel.offset(axis) + q)] = dK[q].cwiseProduct(weight).sum();
    }
  }
  const double fit_noise = -sigma_sq * alpha.squaredNorm();
  const double det_noise = sigma_sq * c.noise_derivative;
  out.gradient[out.gradient.size() - 1] = -0.5 * (fit_noise + det_noise);

  emit(options, {{"event", "lml"},
                 {"value", out.lml.value},
                 {"model_fit", out.lml.model_fit},
                 {"complexity", out.lml.complexity},
                 {"pcg_iterations", out.solve.iterations},
                 {"eigen_clamped", out.lml.clamped}});
  return out;
}

MarginalLikelihood log_marginal_likelihood(const ProductKernel& kernel, const HyperParams& hypers,
                                           const ObservationSet& y, const PcgOptions& options) {
  const KroneckerOperator K = grid_covariance(kernel, hypers, y.grid());
  return log_marginal_likelihood(K, NoiseModel{hypers.noise_var(), y.mask()}, y, options);
}

Eigen::VectorXd ml_gradient(const ProductKernel& kernel, const HyperParams& hypers,
                            const ObservationSet& y, const PcgOptions& options) {
  return lml_and_gradient(kernel, hypers, y, options).gradient;
}

GridPosterior::GridPosterior(const ProductKernel& kernel, const HyperParams& hypers, const ObservationSet& y,
                             PcgOptions options)
    : K_(grid_covariance(kernel, hypers, y.grid())),
      sigma_sq_(hypers.noise_var()),
      mask_(y.mask()),
      options_(options) {
  solve_ = pcg_solve(K_, noise(), y.values(), options_);
}

}  // namespace gpatt
