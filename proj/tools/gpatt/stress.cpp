#include "gpatt/stress.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "gpatt/errors.hpp"
#include "gpatt/inference.hpp"
#include "gpatt/mask.hpp"
#include "gpatt/texture.hpp"

namespace gpatt::cli {
namespace {

ObservationSet holed_texture(std::size_t side, double hole, std::uint64_t seed, Eigen::VectorXd* truth) {
  Eigen::VectorXd v = quasi_periodic_texture(side, side, seed);
  auto mask = centered_hole(side, side, hole);
  if (truth) *truth = v;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (!mask[i]) v[static_cast<Eigen::Index>(i)] = 0.0;
  return ObservationSet(regular_grid(std::vector<std::size_t>{side, side}), std::move(v), std::move(mask));
}

}  // namespace

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ShapeError("slope needs at least two matched points");
  const auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw ShapeError("slope needs distinct sizes");
  return sxy / sxx;
}

std::string gpatt_model_name(std::size_t components) { return "gpatt-" + std::to_string(components); }

nlohmann::json RuntimeReport::to_json() const {
  nlohmann::json r = nlohmann::json::array();
  for (const auto& row : rows)
    r.push_back({{"components", row.components},
                 {"n_train", row.n_train},
                 {"n_grid", row.n_grid},
                 {"seconds", row.seconds},
                 {"pcg_iterations", row.pcg_iterations}});
  nlohmann::json s = nlohmann::json::object();
  for (const auto& [a, slope] : slopes) s[gpatt_model_name(a)] = slope;
  return {{"rows", r}, {"slopes", s}};
}

void RuntimeReport::write_csv(std::ostream& out) const {
  out << "model,n_train,n_grid,seconds,pcg_iterations\n";
  out.precision(10);
  for (const auto& row : rows)
    out << gpatt_model_name(row.components) << ',' << row.n_train << ',' << row.n_grid << ',' << row.seconds << ','
        << row.pcg_iterations << '\n';
}

RuntimeReport run_runtime_suite(const StressOptions& options, const TrainConfig& config, std::ostream* log) {
  RuntimeReport report;
  const PcgOptions pcg = config.pcg();
  for (const std::size_t A : options.components) {
    std::vector<double> ns, ts;
    for (const std::size_t size : options.sizes) {
      const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(size) / options.train_ratio)));
      const ObservationSet y = holed_texture(side, 1.0 - options.train_ratio, config.seed, nullptr);
      const ProductKernel kernel = ProductKernel::smp(2, A);
      std::mt19937_64 rng(config.seed);
      const HyperParams h = initialize(kernel, y, rng, config.lengthscale_mean_factor);
      RuntimeRow row{A, y.num_observed(), y.size(), std::numeric_limits<double>::infinity(), 0};
      for (std::size_t r = 0; r < options.repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        const LmlEvaluation ev = lml_and_gradient(kernel, h, y, pcg);
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        row.seconds = std::min(row.seconds, dt);
        row.pcg_iterations = ev.solve.iterations;
      }
      if (log)
        *log << gpatt_model_name(A) << " n_train=" << row.n_train << " n_grid=" << row.n_grid << " seconds=" << row.seconds
             << " pcg_iterations=" << row.pcg_iterations << std::endl;
      ns.push_back(static_cast<double>(row.n_train));
      ts.push_back(row.seconds);
      report.rows.push_back(row);
    }
    report.slopes[A] = loglog_slope(ns, ts);
    if (log) *log << gpatt_model_name(A) << " slope=" << report.slopes[A] << std::endl;
  }
  return report;
}

std::vector<double> HolesizeReport::msll(const std::string& model) const {
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.model == model) out.push_back(r.metrics.msll);
  return out;
}

const HoleRow& HolesizeReport::at(const std::string& model, double fraction) const {
  for (const auto& r : rows)
    if (r.model == model && std::abs(r.fraction - fraction) < 1e-12) return r;
  throw BoundsError("no holesize row for " + model);
}

nlohmann::json HolesizeReport::to_json() const {
  nlohmann::json r = nlohmann::json::array();
  for (const auto& row : rows)
    r.push_back({{"model", row.model},
                 {"fraction", row.fraction},
                 {"metrics", row.metrics.to_json()},
                 {"final_lml", row.final_lml},
                 {"converged", row.converged},
                 {"in_sample", row.in_sample}});
  return {{"rows", r}};
}

void HolesizeReport::write_csv(std::ostream& out) const {
  out << "model,holesize,smse,msll,n_test,in_sample\n";
  out.precision(10);
  for (const auto& row : rows)
    out << row.model << ',' << row.fraction << ',' << row.metrics.smse << ',' << row.metrics.msll << ','
        << row.metrics.n_test << ',' << (row.in_sample ? 1 : 0) << '\n';
}

HolesizeReport run_holesize_suite(const StressOptions& options, const TrainConfig& config, std::ostream* log) {
  std::vector<std::pair<std::string, TrainConfig>> models;
  TrainConfig gp = config;
  gp.family = Family::spectral_mixture;
  if (options.include_gpatt) models.emplace_back(gpatt_model_name(gp.A), gp);
  for (const auto& name : options.baselines) {
    TrainConfig b = config;
    b.family = family_from_string(name);
    models.emplace_back(to_string(b.family), b);
  }

  HolesizeReport report;
  const std::size_t side = options.texture_size;
  for (const auto& [name, cfg] : models) {
    for (const double hole : options.holes) {
      Eigen::VectorXd truth;
      const ObservationSet raw = holed_texture(side, hole, config.seed, &truth);
      const Eigen::VectorXd yM = raw.observed_values();
      const double mean = yM.mean();
      const double sd = std::sqrt((yM.array() - mean).square().mean());
      Eigen::VectorXd values = (raw.values().array() - mean) / sd;
      for (std::size_t i = 0; i < raw.size(); ++i)
        if (!raw.observed(i)) values[static_cast<Eigen::Index>(i)] = 0.0;
      const ObservationSet y(raw.grid(), values, raw.mask());
      truth = (truth.array() - mean) / sd;

      const TrainReport tr = train(y, cfg);
      const GridPosterior post(tr.kernel, tr.final_hypers, y, cfg.predict_pcg());
      std::vector<std::size_t> test = masked_indices(raw.mask());
      const bool in_sample = test.empty();
      if (in_sample) {
        test.resize(raw.size());
        std::iota(test.begin(), test.end(), std::size_t{0});
      }
      HoleRow row{name, hole, evaluate_holdout(post, truth, test, 0.0, 1.0, cfg.variance_budget, cfg.seed),
                  tr.final_lml, tr.converged, in_sample};
      if (log)
        *log << name << " holesize=" << hole << " smse=" << row.metrics.smse << " msll=" << row.metrics.msll
             << " lml=" << row.final_lml << (row.converged ? "" : " (not converged)") << std::endl;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace gpatt::cli
