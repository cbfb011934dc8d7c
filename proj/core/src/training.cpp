#include "gpatt/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

#include <nlohmann/json.hpp>

#include "gpatt/errors.hpp"

namespace gpatt {

void TrainConfig::validate() const {
  if (A == 0 || restarts == 0 || max_opt_iter == 0 || pcg_max_iter == 0 || predict_max_iter == 0 || variance_budget == 0) {
    throw ParameterError("training counts must be positive");
  }
  if (!(opt_tol > 0.0) || !(pcg_tol > 0.0) || !(lengthscale_mean_factor > 0.0) || !(prune_threshold > 0.0)) {
    throw ParameterError("training tolerances must be positive");
  }
}

ProductKernel TrainConfig::kernel(std::size_t dims) const {
  return family == Family::spectral_mixture ? ProductKernel::smp(dims, A) : ProductKernel::baseline(family, dims);
}

TrainConfig TrainConfig::from_json(const nlohmann::json& doc) {
  TrainConfig c;
  if (doc.contains("kernel")) c.family = family_from_string(doc.at("kernel").get<std::string>());
  c.A = doc.value("A", c.A);
  c.restarts = doc.value("restarts", c.restarts);
  c.max_opt_iter = doc.value("max_opt_iter", c.max_opt_iter);
  c.opt_tol = doc.value("opt_tol", c.opt_tol);
  c.seed = doc.value("seed", c.seed);
  c.pcg_tol = doc.value("pcg_tol", c.pcg_tol);
  c.pcg_max_iter = doc.value("pcg_max_iter", c.pcg_max_iter);
  c.predict_max_iter = doc.value("predict_max_iter", c.predict_max_iter);
  c.variance_budget = doc.value("variance_budget", c.variance_budget);
  c.lengthscale_mean_factor = doc.value("lengthscale_mean_factor", c.lengthscale_mean_factor);
  c.prune_threshold = doc.value("prune_threshold", c.prune_threshold);
  c.validate();
  return c;
}

nlohmann::json TrainConfig::to_json() const {
  return {{"kernel", to_string(family)},
          {"A", A},
          {"restarts", restarts},
          {"max_opt_iter", max_opt_iter},
          {"opt_tol", opt_tol},
          {"seed", seed},
          {"pcg_tol", pcg_tol},
          {"pcg_max_iter", pcg_max_iter},
          {"predict_max_iter", predict_max_iter},
          {"variance_budget", variance_budget},
          {"lengthscale_mean_factor", lengthscale_mean_factor},
          {"prune_threshold", prune_threshold}};
}

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

Moments observed_moments(const ObservationSet& y) {
  const Eigen::VectorXd v = y.observed_values();
  Moments m;
  m.mean = v.mean();
  m.var = (v.array() - m.mean).square().mean();
  return m;
}

double truncated_normal(std::mt19937_64& rng, double mean, double sd) {
  std::normal_distribution<double> normal(mean, sd);
  for (;;) {
    const double v = normal(rng);
    if (v > 0.0) return v;
  }
}

}  // namespace

HyperParams initialize(const ObservationSet& y, std::size_t A, std::mt19937_64& rng,
                       double lengthscale_mean_factor) {
  return initialize(ProductKernel::smp(y.grid().dims(), A), y, rng, lengthscale_mean_factor);
}

HyperParams initialize(const ProductKernel& kernel, const ObservationSet& y, std::mt19937_64& rng,
                       double lengthscale_mean_factor, std::size_t stratum, std::size_t strata) {
  if (strata == 0 || stratum >= strata) throw ParameterError("stratum must lie in [0, strata)");
  const Grid& grid = y.grid();
  const std::size_t P = grid.dims();
  if (kernel.dims() != P) throw ShapeError("kernel dimension does not match the grid");
  const Moments m = observed_moments(y);
  if (!(m.var > 0.0) || !std::isfinite(m.var)) {
    throw InitializationError("observed targets have zero variance");
  }

  Eigen::VectorXd raw(static_cast<Eigen::Index>(kernel.num_params()));
  // Shared log-scale position for baseline lengthscales, stratified over restarts.
  const double u = (static_cast<double>(stratum) + std::uniform_real_distribution<double>(0.0, 1.0)(rng)) /
                   static_cast<double>(strata);
  for (std::size_t p = 0; p < P; ++p) {
    const auto& f = kernel.factor(p);
    const auto o = static_cast<Eigen::Index>(kernel.offset(p));
    const double range = grid.range(p);
    if (f.family() == Family::spectral_mixture) {
      const double A = static_cast<double>(f.components());
      const double w = std::pow(std::sqrt(m.var), 1.0 / static_cast<double>(P)) / A;
      std::uniform_real_distribution<double> freq(0.0, grid.nyquist(p));
      for (std::size_t a = 0; a < f.components(); ++a) {
        const double mu = freq(rng);
        const double r = lengthscale_mean_factor * range;
        const double inv_sigma = truncated_normal(rng, r, 0.5 * r);
        const auto k = o + static_cast<Eigen::Index>(3 * a);
        raw[k] = std::log(w * w);
        raw[k + 1] = std::log(std::max(mu, kMinMeanFreq));
        raw[k + 2] = -2.0 * std::log(inv_sigma);
      }
      continue;
    }
    Eigen::Index k = o;
    if (f.has_amplitude()) raw[k++] = std::log(m.var);
    const double spacing = 0.5 / grid.nyquist(p);
    const double hi = std::max(spacing, lengthscale_mean_factor * range);
    raw[k++] = std::log(spacing) + u * std::log(hi / spacing);
    if (f.family() == Family::rational_quadratic) raw[k++] = 0.0;
  }
  return kernel.make_hypers(std::move(raw), 0.1 * m.var);
}

std::vector<std::vector<std::size_t>> pruned_components(const ProductKernel& kernel, const HyperParams& h,
                                                        double threshold) {
  std::vector<std::vector<std::size_t>> out(kernel.dims());
  for (std::size_t p = 0; p < kernel.dims(); ++p) {
    const auto& f = kernel.factor(p);
    if (f.family() != Family::spectral_mixture) continue;
    const auto raw = kernel.factor_params(h, p);
    double max_w = 0.0;
    for (std::size_t a = 0; a < f.components(); ++a) max_w = std::max(max_w, std::exp(raw[3 * a]));
    for (std::size_t a = 0; a < f.components(); ++a) {
      if (std::exp(raw[3 * a]) < threshold * max_w) out[p].push_back(a);
    }
  }
  return out;
}

namespace {

constexpr int kPolishStages = 2;

struct RunResult {
  BfgsResult bfgs;
  HyperParams hypers;
};

RunResult run_bfgs(const ObservationSet& y, const TrainConfig& config, const ProductKernel& kernel,
                   const HyperParams& start) {
  PcgOptions pcg = config.pcg();
  HyperParams work = start;
  Eigen::VectorXd warm;
  Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    work.set_flat(x);
    const LmlEvaluation ev = lml_and_gradient(kernel, work, y, pcg, warm.size() ? &warm : nullptr);
    if (!std::isfinite(ev.lml.value)) return std::numeric_limits<double>::infinity();
    warm = ev.solve.alpha;
    grad = -ev.gradient;
    return -ev.lml.value;
  };
  BfgsOptions opts;
  opts.max_iter = config.max_opt_iter;
  opts.grad_tol = config.opt_tol;
  RunResult r{minimize_bfgs(objective, start.flat(), opts), start};

  // A failed or stalled line search usually means the gradient is below the
  // solver's noise floor; continue with a tighter PCG tolerance.
  auto stuck = [](BfgsStatus s) { return s == BfgsStatus::line_search_failed || s == BfgsStatus::stalled; };
  for (int stage = 0; stage < kPolishStages && stuck(r.bfgs.status); ++stage) {
    if (r.bfgs.iterations >= config.max_opt_iter) break;
    pcg.tol *= 1e-2;
    opts.max_iter = config.max_opt_iter - r.bfgs.iterations;
    BfgsResult next;
    try {
      next = minimize_bfgs(objective, r.bfgs.x, opts);
    } catch (const Error&) {
      break;  // the tighter solve is out of reach here; keep the current point
    }
    if (next.value > r.bfgs.value + 1e-9 * std::abs(r.bfgs.value)) break;
    r.bfgs.trace.back() = next.trace.front();
    r.bfgs.trace.insert(r.bfgs.trace.end(), next.trace.begin() + 1, next.trace.end());
    r.bfgs.iterations += next.iterations;
    r.bfgs.evaluations += next.evaluations;
    r.bfgs.x = std::move(next.x);
    r.bfgs.value = next.value;
    r.bfgs.gradient = std::move(next.gradient);
    r.bfgs.status = next.status;
  }
  r.hypers.set_flat(r.bfgs.x);
  return r;
}

void finish(TrainReport& report, const RunResult& best, const TrainConfig& config) {
  report.final_hypers = best.hypers;
  report.final_lml = -best.bfgs.value;
  report.final_grad_norm = best.bfgs.gradient.cwiseAbs().maxCoeff();
  report.converged = best.bfgs.status == BfgsStatus::converged;
  report.lml_trace.clear();
  for (double v : best.bfgs.trace) report.lml_trace.push_back(-v);
  report.pruned_components = pruned_components(report.kernel, report.final_hypers, config.prune_threshold);
}

}  // namespace

TrainReport train(const ObservationSet& y, const TrainConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  TrainReport report;
  report.kernel = config.kernel(y.grid().dims());
  std::mt19937_64 rng(config.seed);

  std::optional<RunResult> best;
  for (std::size_t r = 0; r < config.restarts; ++r) {
    RestartSummary summary;
    const HyperParams start =
        initialize(report.kernel, y, rng, config.lengthscale_mean_factor, r, config.restarts);
    try {
      RunResult run = run_bfgs(y, config, report.kernel, start);
      summary.initial_lml = -run.bfgs.trace.front();
      summary.final_lml = -run.bfgs.value;
      summary.iterations = run.bfgs.iterations;
      summary.evaluations = run.bfgs.evaluations;
      summary.status = to_string(run.bfgs.status);
      if (!best || run.bfgs.value < best->bfgs.value) best = std::move(run);
    } catch (const Error& e) {
      summary.failed = true;
      summary.error = e.what();
    }
    report.restarts.push_back(std::move(summary));
  }
  if (!best) throw TrainingError("every restart failed to produce a finite marginal likelihood");
  finish(report, *best, config);
  report.wallclock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

TrainReport refine(const ObservationSet& y, const TrainConfig& config, const ProductKernel& kernel,
                   const HyperParams& start) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  TrainReport report;
  report.kernel = kernel;
  RunResult run = run_bfgs(y, config, kernel, start);
  RestartSummary summary;
  summary.initial_lml = -run.bfgs.trace.front();
  summary.final_lml = -run.bfgs.value;
  summary.iterations = run.bfgs.iterations;
  summary.evaluations = run.bfgs.evaluations;
  summary.status = to_string(run.bfgs.status);
  report.restarts.push_back(summary);
  finish(report, run, config);
  report.wallclock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

nlohmann::json TrainReport::to_json() const {
  nlohmann::json restarts_json = nlohmann::json::array();
  for (const auto& r : restarts) {
    restarts_json.push_back({{"initial_lml", r.initial_lml},
                             {"final_lml", r.final_lml},
                             {"iterations", r.iterations},
                             {"evaluations", r.evaluations},
                             {"status", r.status},
                             {"failed", r.failed},
                             {"error", r.error}});
  }
  return {{"kernel", kernel.to_json()},
          {"hypers", hypers_to_json(kernel, final_hypers)},
          {"final_lml", final_lml},
          {"final_grad_norm", final_grad_norm},
          {"converged", converged},
          {"lml_trace", lml_trace},
          {"pruned_components", pruned_components},
          {"restarts", restarts_json},
          {"wallclock", wallclock}};
}

TrainReport TrainReport::from_json(const nlohmann::json& doc) {
  TrainReport r;
  r.kernel = ProductKernel::from_json(doc.at("kernel"));
  r.final_hypers = hypers_from_json(r.kernel, doc.at("hypers"));
  r.final_lml = doc.value("final_lml", 0.0);
  r.final_grad_norm = doc.value("final_grad_norm", 0.0);
  r.converged = doc.value("converged", false);
  r.lml_trace = doc.value("lml_trace", std::vector<double>{});
  r.pruned_components = doc.value("pruned_components", std::vector<std::vector<std::size_t>>{});
  r.wallclock = doc.value("wallclock", 0.0);
  return r;
}

}  // namespace gpatt
