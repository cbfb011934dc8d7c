// Acceptance gate: one PASS/FAIL line per criterion. Tolerances are fixed here.
//
//   gpatt_acceptance            run every criterion
//   gpatt_acceptance 3 5        run a subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gpatt/errors.hpp"
#include "gpatt/eval.hpp"
#include "gpatt/inference.hpp"
#include "gpatt/kernel_expr.hpp"
#include "gpatt/kronecker.hpp"
#include "gpatt/stress.hpp"
#include "gpatt/training.hpp"
#include "oracles.hpp"

using namespace gpatt;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;  ///< wallclock limit, 0 = none
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<std::uint8_t> random_holes(std::size_t n, std::size_t count, std::mt19937_64& rng) {
  std::vector<std::uint8_t> mask(n, 1);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  for (std::size_t i = 0; i < count; ++i) mask[idx[i]] = 0;
  return mask;
}

Grid random_grid(std::size_t dims, std::size_t lo, std::size_t hi, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> size(lo, hi);
  std::uniform_real_distribution<double> spacing(0.3, 1.0);
  std::vector<std::vector<double>> axes;
  for (std::size_t p = 0; p < dims; ++p) {
    std::vector<double> a(size(rng));
    const double h = spacing(rng);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = h * static_cast<double>(i);
    axes.push_back(std::move(a));
  }
  return Grid(std::move(axes));
}

/// Random kernel of any family with hyperparameters in a moderate range.
std::pair<ProductKernel, HyperParams> random_model(std::size_t dims, std::mt19937_64& rng, double noise) {
  std::uniform_int_distribution<int> pick(0, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int f = pick(rng);
  if (f == 0) {
    const std::size_t A = 1 + static_cast<std::size_t>(u(rng) * 2.0);
    const ProductKernel pk = ProductKernel::smp(dims, A);
    SMPKernel k;
    for (std::size_t p = 0; p < dims; ++p) {
      SMKernel1D d;
      for (std::size_t a = 0; a < A; ++a) d.components.push_back({0.3 + u(rng), 0.05 + 0.4 * u(rng), 0.005 + 0.05 * u(rng)});
      k.per_dim.push_back(d);
    }
    return {pk, pack_smp(k, noise)};
  }
  const Family fam = f == 1 ? Family::squared_exponential : f == 2 ? Family::matern32 : Family::rational_quadratic;
  const ProductKernel pk = ProductKernel::baseline(fam, dims);
  Eigen::VectorXd raw(static_cast<Eigen::Index>(pk.num_params()));
  for (Eigen::Index i = 0; i < raw.size(); ++i) raw[i] = std::log(0.5 + 1.5 * u(rng));
  return {pk, pk.make_hypers(raw, noise)};
}

// 1
Outcome kronecker_oracle() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> dims(1, 3), size(2, 6);
  double mv_err = 0.0, eig_err = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::vector<Eigen::MatrixXd> factors;
    const std::size_t P = dims(rng);
    for (std::size_t p = 0; p < P; ++p) factors.push_back(oracle::random_spd(static_cast<Eigen::Index>(size(rng)), rng));
    const Eigen::MatrixXd K = oracle::dense_kron(factors);
    const Eigen::VectorXd u = oracle::random_vector(K.rows(), rng);
    mv_err = std::max(mv_err, (kron_mvprod(factors, u) - K * u).cwiseAbs().maxCoeff());

    const EigenSystem eig = eigendecompose(KroneckerOperator(factors));
    Eigen::VectorXd got = eig.merged();
    std::sort(got.begin(), got.end());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dense(K);
    eig_err = std::max(eig_err, (got - dense.eigenvalues()).cwiseAbs().maxCoeff());
    const Eigen::MatrixXd Q = oracle::dense_kron(eig.vectors);
    const Eigen::MatrixXd rebuilt = Q * eig.merged().asDiagonal() * Q.transpose();
    eig_err = std::max(eig_err, (rebuilt - K).cwiseAbs().maxCoeff());
  }
  return {mv_err <= 1e-10 && eig_err <= 1e-8, fmt("max mvprod err %.2e (<= 1e-10), max eigen err %.2e (<= 1e-8)", mv_err, eig_err)};
}

// 2
Outcome imaginary_equivalence() {
  constexpr double tol = 1e-10;
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> noise(0.05, 0.5);
  double mean_err = 0.0, var_err = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Grid g = random_grid(t % 2 ? 2 : 3, 3, t % 2 ? 8 : 4, rng);
    const auto [pk, h] = random_model(g.dims(), rng, noise(rng));
    const std::size_t n = g.size();
    const auto mask = random_holes(n, std::max<std::size_t>(1, n / 4), rng);
    Eigen::VectorXd v = oracle::random_vector(static_cast<Eigen::Index>(n), rng);
    for (std::size_t i = 0; i < n; ++i)
      if (!mask[i]) v[static_cast<Eigen::Index>(i)] = 0.0;
    const ObservationSet y(g, v, mask);
    const GridPosterior post(pk, h, y, {tol, 10000, nullptr});
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const Eigen::VectorXd mean = post.mean();
    const Eigen::VectorXd var = post.variance(all);
    const oracle::DenseGp ref = oracle::dense_gp(oracle::dense_grid_covariance(pk, h, g), h.noise_var(), mask, v);
    const double scale = std::max(1.0, ref.mean.cwiseAbs().maxCoeff());
    mean_err = std::max(mean_err, (mean - ref.mean).cwiseAbs().maxCoeff() / scale);
    var_err = std::max(var_err, (var - ref.variance.cwiseMax(0.0)).cwiseAbs().maxCoeff() / pk.at_zero(h));
  }
  const double limit = 10.0 * tol;
  return {mean_err <= limit && var_err <= limit,
          fmt("pcg tol %.0e: max mean err %.2e, max variance err %.2e (<= %.0e, relative to max(1,|mean|) / k(0))", tol,
              mean_err, var_err, limit)};
}

// 3
Outcome full_grid_lml() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> noise(0.01, 0.5);
  double err = 0.0;
  for (int t = 0; t < 40; ++t) {
    const Grid g = random_grid(t % 3 == 0 ? 1 : 2, 2, 8, rng);
    const auto [pk, h] = random_model(g.dims(), rng, noise(rng));
    const Eigen::VectorXd v = oracle::random_vector(static_cast<Eigen::Index>(g.size()), rng);
    const ObservationSet y = ObservationSet::full(g, v);
    const double got = log_marginal_likelihood(pk, h, y, {1e-12, 1000, nullptr}).value;
    const double ref = oracle::dense_gp(oracle::dense_grid_covariance(pk, h, g), h.noise_var(), y.mask(), v).lml;
    err = std::max(err, std::abs(got - ref));
  }
  return {err <= 1e-6, fmt("40 complete grids up to 8x8: max |lml - dense| %.2e (<= 1e-6)", err)};
}

// 4
Outcome gradient_check() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> noise(0.05, 0.5);
  const PcgOptions tight{1e-12, 10000, nullptr};
  std::size_t bad = 0, total = 0;
  double worst_ratio = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Grid g = random_grid(t % 4 == 0 ? 1 : 2, 4, 7, rng);
    const auto [pk, h] = random_model(g.dims(), rng, noise(rng));
    const std::size_t n = g.size();
    const auto mask = t % 2 ? random_holes(n, n / 5, rng) : std::vector<std::uint8_t>(n, 1);
    Eigen::VectorXd v = oracle::random_vector(static_cast<Eigen::Index>(n), rng);
    for (std::size_t i = 0; i < n; ++i)
      if (!mask[i]) v[static_cast<Eigen::Index>(i)] = 0.0;
    const ObservationSet y(g, v, mask);
    const Eigen::VectorXd grad = ml_gradient(pk, h, y, tight);
    const Eigen::VectorXd fd = oracle::central_difference(
        [&](const Eigen::VectorXd& x) {
          HyperParams hx = h;
          hx.set_flat(x);
          return log_marginal_likelihood(pk, hx, y, tight).value;
        },
        h.flat(), 1e-5);
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
      const double allowed = std::max(1e-4, 1e-2 * std::abs(grad[i]));
      const double diff = std::abs(grad[i] - fd[i]);
      worst_ratio = std::max(worst_ratio, diff / allowed);
      bad += diff > allowed;
      ++total;
    }
  }
  return {bad == 0, fmt("%zu of %zu components outside max(1e-4, 1e-2|g|); worst err/allowed %.2e", bad, total, worst_ratio)};
}

// 5
Outcome bochner_duality() {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double err = 0.0;
  for (int d = 0; d < 20; ++d) {
    SMKernel1D k;
    const int A = 1 + d % 3;
    for (int a = 0; a < A; ++a) k.components.push_back({0.2 + 2.0 * u(rng), 0.02 + 0.5 * u(rng), 1e-3 + 0.05 * u(rng)});
    for (int l = 0; l < 20; ++l) {
      const double tau = 10.0 * u(rng);
      err = std::max(err, std::abs(k_sm_1d(tau, k) - oracle::bochner_inverse(k, tau)));
    }
  }
  return {err <= 1e-6, fmt("400 lag/parameter pairs: max |k - quadrature| %.2e (<= 1e-6)", err)};
}

// 6
Outcome metric_fixed_points() {
  std::mt19937_64 rng(606);
  double smse_err = 0.0, msll_err = 0.0;
  for (int t = 0; t < 10; ++t) {
    const Eigen::VectorXd y = (oracle::random_vector(50 + 10 * t, rng).array() * (1.0 + t) + 3.0 * t).matrix();
    const double m = y.mean();
    const double var = (y.array() - m).square().mean();
    const Eigen::VectorXd pm = Eigen::VectorXd::Constant(y.size(), m);
    const Eigen::VectorXd pv = Eigen::VectorXd::Constant(y.size(), var);
    smse_err = std::max(smse_err, std::abs(smse(pm, y) - 1.0));
    msll_err = std::max(msll_err, std::abs(msll(pm, pv, y, m, var)));
  }
  return {smse_err <= 1e-9 && msll_err <= 1e-9,
          fmt("trivial predictor: max |SMSE - 1| %.2e, max |MSLL| %.2e (<= 1e-9)", smse_err, msll_err)};
}

// 7
std::vector<KernelExpr> movie_kernels() {
  using K = KernelExpr;
  const K k1 = K::sum({K::se(6.0), K::product({K::se(12.0), K::periodic(1.0 / 5.0, 1.0)})});
  const K k2 = K::sum({K::product({K::matern32(10.0), K::periodic(1.0 / 6.0, 1.0)}),
                       K::product({K::matern32(14.0), K::periodic(1.0 / 4.0, 1.2)})});
  const K k3 = K::sum({K::product({K::sum({K::rq(6.0, 2.0), K::periodic(1.0 / 7.0, 1.0)}), K::periodic(1.0 / 3.0, 1.5)}),
                       K::se(4.0)});
  return {k1, k2, k3};
}

Outcome kernel_recovery() {
  const auto truth = movie_kernels();
  const Grid g = regular_grid(std::vector<std::size_t>{20, 20, 20});
  std::vector<std::vector<double>> taus(3);
  for (auto& t : taus)
    for (int i = 0; i <= 40; ++i) t.push_back(0.25 * i);  // up to half the extent of 19
  std::vector<std::array<double, 3>> disc;
  std::vector<double> worst;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    std::mt19937_64 rng(seed);
    const ObservationSet full = sample_grid_gp(truth, g, 0.01, rng);
    std::vector<std::uint8_t> mask(g.size(), 1);
    Eigen::VectorXd v = full.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const std::size_t t = g.multi_index(i)[2];
      if (t == 9 || t == 10) {
        mask[i] = 0;
        v[static_cast<Eigen::Index>(i)] = 0.0;
      }
    }
    TrainConfig cfg;
    cfg.A = 8;
    cfg.seed = seed;
    const TrainReport r = train(ObservationSet(g, v, mask), cfg);
    const RecoveryComparison cmp = kernel_recovery_compare(truth, unpack_smp(r.kernel, r.final_hypers), taus);
    disc.push_back({cmp.discrepancy[0], cmp.discrepancy[1], cmp.discrepancy[2]});
    worst.push_back(*std::max_element(cmp.discrepancy.begin(), cmp.discrepancy.end()));
  }
  std::array<double, 3> med{};
  std::string per_seed;
  for (std::size_t p = 0; p < 3; ++p) {
    med[p] = median({disc[0][p], disc[1][p], disc[2][p]});
  }
  for (const auto& d : disc) per_seed += fmt(" [%.3f %.3f %.3f]", d[0], d[1], d[2]);
  const bool ok = std::all_of(med.begin(), med.end(), [](double d) { return d <= 0.15; });
  return {ok, fmt("median discrepancy per dim %.3f %.3f %.3f (<= 0.15); seeds:", med[0], med[1], med[2]) + per_seed};
}

// 8
Outcome pruning() {
  const SMKernel1D truth{{{1.0, 0.08, 2e-4}, {0.6, 0.27, 5e-4}}};
  const Grid g = regular_grid(std::vector<std::size_t>{400});
  std::vector<double> counts;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    std::mt19937_64 rng(seed);
    const ObservationSet y = sample_grid_gp({KernelExpr::sm(truth)}, g, 0.01, rng);
    TrainConfig cfg;
    cfg.A = 10;
    cfg.seed = seed;
    const TrainReport r = train(y, cfg);
    const auto pruned = pruned_components(r.kernel, r.final_hypers, 1e-4);
    counts.push_back(static_cast<double>(pruned[0].size()));
    per_seed += fmt(" %zu", pruned[0].size());
  }
  const double med = median(counts);
  return {med >= 4.0, fmt("median pruned components %.0f of 10 (>= 4); per seed:", med) + per_seed};
}

// 9
Outcome runtime_scaling() {
  cli::StressOptions opt;  // sizes 1e3..1e5, A in {5, 25, 100}, ratio 0.7, best of 3
  TrainConfig cfg;
  const cli::RuntimeReport r = cli::run_runtime_suite(opt, cfg);
  bool ok = true;
  std::string detail;
  for (const auto& [A, slope] : r.slopes) {
    ok = ok && slope >= 0.7 && slope <= 1.3;
    detail += fmt("GPatt-%zu slope %.3f; ", A, slope);
  }
  return {ok, detail + "(each in [0.7, 1.3])"};
}

// 10
Outcome extrapolation() {
  TrainConfig cfg;
  cfg.A = 10;
  cli::StressOptions head;
  head.texture_size = 64;
  head.holes = {0.25};
  head.baselines = {"se"};
  const cli::HolesizeReport h2h = cli::run_holesize_suite(head, cfg);
  const auto& gp = h2h.at(cli::gpatt_model_name(10), 0.25);
  const auto& se = h2h.at("se", 0.25);
  const bool beats = gp.metrics.smse < se.metrics.smse && gp.metrics.msll < se.metrics.msll;

  cli::StressOptions ladder;
  ladder.texture_size = 64;
  ladder.holes = {0.1, 0.25, 0.4};
  ladder.include_gpatt = false;
  const cli::HolesizeReport lad = cli::run_holesize_suite(ladder, cfg);
  bool monotone = true;
  std::string curves;
  for (const auto& b : ladder.baselines) {
    const auto m = lad.msll(to_string(family_from_string(b)));
    monotone = monotone && std::is_sorted(m.begin(), m.end());
    curves += fmt(" %s [%.3f %.3f %.3f]", b.c_str(), m[0], m[1], m[2]);
  }
  return {beats && monotone,
          fmt("25%% hole: GPatt-10 SMSE %.3f MSLL %.3f vs SE SMSE %.3f MSLL %.3f; MSLL ladder 10/25/40%%:",
              gp.metrics.smse, gp.metrics.msll, se.metrics.smse, se.metrics.msll) +
              curves + (monotone ? " (non-decreasing)" : " (not monotone)")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "kronecker-oracle-equivalence", 10.0, kronecker_oracle},
      {2, "imaginary-observation-equivalence", 60.0, imaginary_equivalence},
      {3, "full-grid-marginal-likelihood", 10.0, full_grid_lml},
      {4, "gradient-check", 120.0, gradient_check},
      {5, "bochner-duality", 30.0, bochner_duality},
      {6, "metric-fixed-points", 0.0, metric_fixed_points},
      {7, "kernel-recovery", 900.0, kernel_recovery},
      {8, "pruning", 300.0, pruning},
      {9, "runtime-scaling", 0.0, runtime_scaling},
      {10, "extrapolation-superiority", 0.0, extrapolation},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt("%.1f s", dt);
    if (c.budget_s > 0.0) {
      timing += fmt(" / %.0f s", c.budget_s);
      if (dt > c.budget_s) {
        o.pass = false;
        timing += " over budget";
      }
    }
    failures += !o.pass;
    std::printf("%s  %2d %-34s %s [%s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
