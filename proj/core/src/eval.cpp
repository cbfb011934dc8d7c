#include "gpatt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "gpatt/errors.hpp"

namespace gpatt {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double neg_log_density(double y, double mean, double var) {
  const double r = y - mean;
  return 0.5 * std::log(kTwoPi * var) + 0.5 * r * r / var;
}

}  // namespace

double smse(const Eigen::VectorXd& pred_mean, const Eigen::VectorXd& targets) {
  if (targets.size() == 0) throw MetricError("empty test set");
  if (pred_mean.size() != targets.size()) throw ShapeError("prediction and target sizes differ");
  const double mean = targets.mean();
  const double var = (targets.array() - mean).square().mean();
  if (!(var > 0.0)) throw MetricError("test targets have zero variance");
  return (pred_mean - targets).squaredNorm() / static_cast<double>(targets.size()) / var;
}

double msll(const Eigen::VectorXd& pred_mean, const Eigen::VectorXd& pred_var, const Eigen::VectorXd& targets,
            double train_mean, double train_var) {
  if (targets.size() == 0) throw MetricError("empty test set");
  if (pred_mean.size() != targets.size() || pred_var.size() != targets.size()) {
    throw ShapeError("prediction and target sizes differ");
  }
  if (!(train_var > 0.0)) throw MetricError("training variance must be positive");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    if (!(pred_var[i] > 0.0)) throw MetricError("predictive variance must be positive");
    sum += neg_log_density(targets[i], pred_mean[i], pred_var[i]) -
           neg_log_density(targets[i], train_mean, train_var);
  }
  return sum / static_cast<double>(targets.size());
}

nlohmann::json MetricReport::to_json() const {
  return {{"smse", smse}, {"msll", msll}, {"n_test", n_test}, {"variance_subsampled", variance_subsampled}};
}

MetricReport evaluate_holdout(const GridPosterior& posterior, const Eigen::VectorXd& truth,
                              std::span<const std::size_t> test_indices, double train_mean, double train_var,
                              std::size_t variance_budget, std::uint64_t seed) {
  if (test_indices.empty()) throw MetricError("empty test set");
  if (static_cast<std::size_t>(truth.size()) != posterior.covariance().size()) {
    throw ShapeError("ground truth does not cover the grid");
  }
  const Eigen::VectorXd mean = posterior.mean();
  const auto n = static_cast<Eigen::Index>(test_indices.size());
  Eigen::VectorXd m(n), t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m[i] = mean[static_cast<Eigen::Index>(test_indices[i])];
    t[i] = truth[static_cast<Eigen::Index>(test_indices[i])];
  }
  MetricReport report;
  report.n_test = test_indices.size();
  report.smse = gpatt::smse(m, t);

  std::vector<std::size_t> var_idx(test_indices.begin(), test_indices.end());
  if (variance_budget > 0 && var_idx.size() > variance_budget) {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> pick(variance_budget);
    std::sample(var_idx.begin(), var_idx.end(), pick.begin(), variance_budget, rng);
    var_idx = std::move(pick);
    report.variance_subsampled = true;
  }
  const Eigen::VectorXd latent = posterior.variance(var_idx);
  const auto k = static_cast<Eigen::Index>(var_idx.size());
  Eigen::VectorXd vm(k), vv(k), vt(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto j = static_cast<Eigen::Index>(var_idx[static_cast<std::size_t>(i)]);
    vm[i] = mean[j];
    vt[i] = truth[j];
    vv[i] = latent[i] + posterior.noise().sigma_sq;
  }
  report.msll = gpatt::msll(vm, vv, vt, train_mean, train_var);
  return report;
}

Eigen::VectorXd sample_kronecker_gp(const KroneckerOperator& K, double noise_var, std::mt19937_64& rng) {
  if (noise_var < 0.0) throw ParameterError("noise variance must be non-negative");
  std::vector<Eigen::MatrixXd> roots;
  roots.reserve(K.num_factors());
  for (const auto& f : K.factors()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f);
    if (es.info() != Eigen::Success) throw SamplingError("factor eigendecomposition failed");
    Eigen::VectorXd v = es.eigenvalues();
    const double scale = std::max(v.cwiseAbs().maxCoeff(), 1e-300);
    if (v.minCoeff() < -1e-8 * scale) throw SamplingError("factor has a negative eigenvalue");
    v = v.cwiseMax(0.0).cwiseSqrt();
    roots.push_back(es.eigenvectors() * v.asDiagonal() * es.eigenvectors().transpose());
  }
  std::normal_distribution<double> normal;
  const auto N = static_cast<Eigen::Index>(K.size());
  Eigen::VectorXd z(N);
  for (Eigen::Index i = 0; i < N; ++i) z[i] = normal(rng);
  Eigen::VectorXd f = kron_mvprod(roots, z);
  if (noise_var > 0.0) {
    const double s = std::sqrt(noise_var);
    for (Eigen::Index i = 0; i < N; ++i) f[i] += s * normal(rng);
  }
  return f;
}

ObservationSet sample_grid_gp(const std::vector<KernelExpr>& per_axis, const Grid& grid, double noise_var,
                              std::mt19937_64& rng) {
  if (per_axis.size() != grid.dims()) throw ShapeError("one kernel per grid axis is required");
  std::vector<Eigen::MatrixXd> grams;
  grams.reserve(grid.dims());
  for (std::size_t p = 0; p < grid.dims(); ++p) {
    const KernelExpr& k = per_axis[p];
    grams.push_back(gram_1d([&k](double tau) { return k(tau); }, grid.axis(p)));
  }
  const KroneckerOperator K = KroneckerOperator::from_axis_factors(std::move(grams));
  return ObservationSet::full(grid, sample_kronecker_gp(K, noise_var, rng));
}

nlohmann::json KernelSlice::to_json() const {
  nlohmann::json doc = {{"dim", dim}, {"taus", taus}, {"learned", learned_values}};
  if (true_values) doc["true"] = *true_values;
  return doc;
}

void KernelSlice::write_csv(std::ostream& out) const {
  out << (true_values ? "tau,learned,true\n" : "tau,learned\n");
  out.precision(17);
  for (std::size_t i = 0; i < taus.size(); ++i) {
    out << taus[i] << ',' << learned_values[i];
    if (true_values) out << ',' << (*true_values)[i];
    out << '\n';
  }
}

namespace {

std::vector<double> normalized_curve(const KernelExpr& k, const std::vector<double>& taus) {
  const double k0 = k(0.0);
  if (!(k0 > 0.0)) throw ParameterError("kernel must be positive at zero lag");
  std::vector<double> out(taus.size());
  std::transform(taus.begin(), taus.end(), out.begin(), [&](double t) { return k(t) / k0; });
  return out;
}

}  // namespace

RecoveryComparison kernel_recovery_compare(const std::vector<KernelExpr>& truth,
                                           const std::vector<KernelExpr>& learned,
                                           const std::vector<std::vector<double>>& taus) {
  if (truth.size() != learned.size() || truth.size() != taus.size()) {
    throw ShapeError("truth, learned kernels and lags must cover the same dimensions");
  }
  RecoveryComparison out;
  for (std::size_t p = 0; p < truth.size(); ++p) {
    KernelSlice slice;
    slice.dim = p;
    slice.taus = taus[p];
    slice.learned_values = normalized_curve(learned[p], taus[p]);
    slice.true_values = normalized_curve(truth[p], taus[p]);
    double worst = 0.0;
    for (std::size_t i = 0; i < slice.taus.size(); ++i) {
      worst = std::max(worst, std::abs(slice.learned_values[i] - (*slice.true_values)[i]));
    }
    out.discrepancy.push_back(worst);
    out.slices.push_back(std::move(slice));
  }
  return out;
}

RecoveryComparison kernel_recovery_compare(const std::vector<KernelExpr>& truth, const SMPKernel& learned,
                                           const std::vector<std::vector<double>>& taus) {
  std::vector<KernelExpr> per_dim;
  per_dim.reserve(learned.per_dim.size());
  for (const auto& k : learned.per_dim) per_dim.push_back(KernelExpr::sm(k));
  return kernel_recovery_compare(truth, per_dim, taus);
}

KernelSlice learned_slice(const ProductKernel& kernel, const HyperParams& h, std::size_t dim,
                          std::vector<double> taus) {
  if (dim >= kernel.dims()) throw BoundsError("dimension out of range");
  const auto& f = kernel.factor(dim);
  const auto raw = kernel.factor_params(h, dim);
  const double k0 = f.value(0.0, raw);
  if (!(k0 > 0.0)) throw ParameterError("kernel must be positive at zero lag");
  KernelSlice slice;
  slice.dim = dim;
  slice.learned_values.reserve(taus.size());
  for (double t : taus) slice.learned_values.push_back(f.value(t, raw) / k0);
  slice.taus = std::move(taus);
  return slice;
}

Eigen::VectorXd export_spectrum(const SMKernel1D& kernel, std::span<const double> freqs) {
  kernel.validate();
  static const double floor = std::log(1e-300);
  Eigen::VectorXd out(static_cast<Eigen::Index>(freqs.size()));
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    const double s = sm_spectral_density(freqs[i], kernel);
    out[static_cast<Eigen::Index>(i)] = s > 1e-300 ? std::log(s) : floor;
  }
  return out;
}

}  // namespace gpatt
