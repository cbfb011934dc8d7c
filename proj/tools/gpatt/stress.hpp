#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gpatt/eval.hpp"
#include "gpatt/job.hpp"
#include "gpatt/training.hpp"

namespace gpatt::cli {

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct RuntimeRow {
  std::size_t components = 0;
  std::size_t n_train = 0;
  std::size_t n_grid = 0;
  double seconds = 0.0;  ///< best of the repeats
  std::size_t pcg_iterations = 0;
};

struct RuntimeReport {
  std::vector<RuntimeRow> rows;
  std::map<std::size_t, double> slopes;  ///< per component count

  nlohmann::json to_json() const;
  void write_csv(std::ostream& out) const;
};

/// Times one log marginal likelihood + gradient evaluation of GPatt-A (P = 2)
/// on square quasi-periodic textures with a centered hole, so that the
/// training instances are about `train_ratio` of the grid nodes. Hyperparameters
/// come from the standard initialization with `seed`.
RuntimeReport run_runtime_suite(const StressOptions& options, const TrainConfig& config,
                                std::ostream* log = nullptr);

struct HoleRow {
  std::string model;
  double fraction = 0.0;
  MetricReport metrics;
  double final_lml = 0.0;
  bool converged = false;
  bool in_sample = false;  ///< no hole: scored on the training nodes
};

struct HolesizeReport {
  std::vector<HoleRow> rows;

  /// MSLL of `model` in ladder order.
  std::vector<double> msll(const std::string& model) const;
  const HoleRow& at(const std::string& model, double fraction) const;

  nlohmann::json to_json() const;
  void write_csv(std::ostream& out) const;
};

/// Trains GPatt-A (A from `config`) and each baseline on a texture_size^2
/// texture with a centered square hole per ladder fraction, scoring the hole.
/// A zero fraction has no hole and is scored in-sample on every node.
HolesizeReport run_holesize_suite(const StressOptions& options, const TrainConfig& config,
                                  std::ostream* log = nullptr);

std::string gpatt_model_name(std::size_t components);

}  // namespace gpatt::cli
