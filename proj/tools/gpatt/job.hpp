#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gpatt/grid.hpp"
#include "gpatt/training.hpp"

namespace gpatt::cli {

enum class Command { train, predict, inpaint, synth, spectrum, stress };

std::string to_string(Command command);
Command command_from_string(const std::string& name);

struct StressOptions {
  std::string suite = "runtime";  ///< runtime | holesize
  std::vector<std::size_t> sizes{1000, 10000, 100000};  ///< training instances
  std::vector<std::size_t> components{5, 25, 100};
  double train_ratio = 0.7;
  std::size_t repeats = 3;
  std::size_t texture_size = 64;
  std::vector<double> holes{0.0, 0.1, 0.25, 0.4};
  std::vector<std::string> baselines{"se", "rq", "matern32"};
  bool include_gpatt = true;  ///< holesize suite: also run GPatt-A
};

/// One CLI invocation. Every field has a flag and a JSON key of the same name.
struct Job {
  Command command = Command::train;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::string> masks;
  std::string kernel = "smp";  ///< family name, or generating-kernel JSON (path or inline) for synth
  TrainConfig train;
  std::filesystem::path out = "out";
  std::string format = "auto";  ///< auto | raster | csv | points | obs
  std::optional<std::filesystem::path> report;        ///< predict/spectrum: train_report.json
  std::optional<std::filesystem::path> truth;         ///< predict: full-grid ground truth
  std::optional<std::string> truth_kernel;            ///< train: generating kernel for recovery
  std::vector<std::size_t> grid;                      ///< synth shape, e.g. 30x30x30
  double noise_var = 0.01;                            ///< synth
  std::size_t spectrum_points = 512;
  StressOptions stress;

  /// Fields present in `doc` override the current values.
  void merge_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
  /// Throws InputError when the job is not runnable.
  void validate() const;
};

std::vector<std::size_t> parse_shape(const std::string& text);

/// Observations loaded from any supported input format.
struct LoadedData {
  ObservationSet obs;
  std::size_t width = 0;   ///< nonzero for 2-D raster/csv inputs
  std::size_t height = 0;
};

/// Rasters must be grayscale here; masks apply to raster and csv grids.
LoadedData load_observations(const std::filesystem::path& path, const std::string& format,
                             const std::vector<std::string>& masks);

/// Reads inline JSON when `text` starts with '{' or '[', otherwise a file.
nlohmann::json read_json_arg(const std::string& text);

}  // namespace gpatt::cli
