#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gpatt/commands.hpp"
#include "gpatt/errors.hpp"
#include "gpatt/job.hpp"

using gpatt::cli::Command;
using gpatt::cli::Job;

namespace {

struct Flags {
  std::vector<std::string> inputs;
  std::vector<std::string> masks;
  std::string kernel;
  std::string out;
  std::string format;
  std::string report;
  std::string truth;
  std::string truth_kernel;
  std::string grid;
  std::string config;
  std::string suite;
  double noise_var = -1.0;
  std::size_t A = 0;
  std::size_t restarts = 0;
  std::size_t max_opt_iter = 0;
  std::size_t spectrum_points = 0;
  double pcg_tol = 0.0;
  long long seed = -1;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--config", f.config, "job.json; its fields override all flags");
  cmd->add_option("--seed", f.seed, "Random seed");
}

void add_training(CLI::App* cmd, Flags& f) {
  cmd->add_option("--kernel", f.kernel, "smp | se | rq | matern32");
  cmd->add_option("--A", f.A, "Spectral-mixture components per dimension");
  cmd->add_option("--restarts", f.restarts, "Random restarts");
  cmd->add_option("--max-iter", f.max_opt_iter, "BFGS iterations per restart");
  cmd->add_option("--pcg-tol", f.pcg_tol, "Relative residual tolerance of conjugate gradients");
}

void add_data(CLI::App* cmd, Flags& f) {
  cmd->add_option("--input", f.inputs, "PGM/PPM raster, CSV grid, point CSV or observation-set JSON")->required();
  cmd->add_option("--mask", f.masks, "rect:x0,y0,x1,y1 or a raster whose zero pixels are masked; repeatable");
  cmd->add_option("--format", f.format, "auto | raster | csv | points | obs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian process pattern extrapolation on multidimensional grids"};
  app.require_subcommand(1);
  Flags f;

  auto* train = app.add_subcommand("train", "Learn kernel hyperparameters from grid data");
  add_data(train, f);
  add_training(train, f);
  train->add_option("--truth-kernel", f.truth_kernel, "Generating kernel JSON for a recovery comparison");
  train->add_option("--spectrum-points", f.spectrum_points, "Frequencies per learned spectrum");

  auto* predict = app.add_subcommand("predict", "Posterior mean and variance on the full grid");
  add_data(predict, f);
  predict->add_option("--report", f.report, "train_report.json from train")->required();
  predict->add_option("--truth", f.truth, "Complete ground-truth grid for metrics on masked nodes");
  predict->add_option("--pcg-tol", f.pcg_tol, "Relative residual tolerance of conjugate gradients");

  auto* inpaint = app.add_subcommand("inpaint", "Fill masked pixels of a grayscale or RGB raster");
  add_data(inpaint, f);
  add_training(inpaint, f);
  inpaint->add_option("--spectrum-points", f.spectrum_points, "Frequencies per learned spectrum");

  auto* synth = app.add_subcommand("synth", "Draw a grid sample from a compositional kernel");
  synth->add_option("--kernel", f.kernel, "Kernel JSON file or inline JSON")->required();
  synth->add_option("--grid", f.grid, "Grid shape, e.g. 30x30x30")->required();
  synth->add_option("--noise-var", f.noise_var, "Observation noise variance");

  auto* spectrum = app.add_subcommand("spectrum", "Export learned log spectral densities");
  spectrum->add_option("--report", f.report, "train_report.json from train")->required();
  spectrum->add_option("--spectrum-points", f.spectrum_points, "Frequencies per spectrum");

  auto* stress = app.add_subcommand("stress", "Runtime or accuracy stress suite on synthetic textures");
  stress->add_option("--suite", f.suite, "runtime | holesize")->required();
  add_training(stress, f);

  for (auto* cmd : {train, predict, inpaint, synth, spectrum, stress}) add_common(cmd, f);

  CLI11_PARSE(app, argc, argv);

  Job job;
  try {
    job.command = gpatt::cli::command_from_string(app.get_subcommands().front()->get_name());
    for (const auto& p : f.inputs) job.inputs.emplace_back(p);
    job.masks = f.masks;
    if (!f.kernel.empty()) {
      if (job.command == Command::synth) {
        job.kernel = f.kernel;
      } else {
        job.train.family = gpatt::family_from_string(f.kernel);
        job.kernel = f.kernel;
      }
    }
    if (!f.out.empty()) job.out = f.out;
    if (!f.format.empty()) job.format = f.format;
    if (!f.report.empty()) job.report = f.report;
    if (!f.truth.empty()) job.truth = f.truth;
    if (!f.truth_kernel.empty()) job.truth_kernel = f.truth_kernel;
    if (!f.grid.empty()) job.grid = gpatt::cli::parse_shape(f.grid);
    if (!f.suite.empty()) job.stress.suite = f.suite;
    if (f.noise_var >= 0.0) job.noise_var = f.noise_var;
    if (f.A) job.train.A = f.A;
    if (f.restarts) job.train.restarts = f.restarts;
    if (f.max_opt_iter) job.train.max_opt_iter = f.max_opt_iter;
    if (f.spectrum_points) job.spectrum_points = f.spectrum_points;
    if (f.pcg_tol > 0.0) job.train.pcg_tol = f.pcg_tol;
    if (f.seed >= 0) job.train.seed = static_cast<std::uint64_t>(f.seed);
    if (!f.config.empty()) job.merge_json(gpatt::cli::read_json_arg(f.config));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return gpatt::cli::run_job(job, std::cerr);
}
