#include "gpatt/job.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gpatt/errors.hpp"
#include "gpatt/grid_io.hpp"
#include "gpatt/mask.hpp"
#include "gpatt/raster.hpp"

namespace gpatt::cli {
namespace {

std::string extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

std::string resolve_format(const std::filesystem::path& path, const std::string& format) {
  if (format != "auto") return format;
  const std::string ext = extension(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return "raster";
  if (ext == ".csv") return "csv";
  if (ext == ".json") return "obs";
  throw InputError("cannot infer the format of " + path.string() + "; pass --format");
}

ObservationSet masked_grid(std::size_t width, std::size_t height, Eigen::VectorXd values,
                           std::vector<std::uint8_t> present, const std::vector<std::string>& masks) {
  const auto mask = resolve_mask(masks, width, height);
  for (std::size_t i = 0; i < present.size(); ++i) present[i] = static_cast<std::uint8_t>(present[i] && mask[i]);
  for (std::size_t i = 0; i < present.size(); ++i)
    if (!present[i]) values[static_cast<Eigen::Index>(i)] = 0.0;
  return ObservationSet(regular_grid(std::vector<std::size_t>{width, height}), std::move(values), std::move(present));
}

}  // namespace

std::string to_string(Command command) {
  switch (command) {
    case Command::train: return "train";
    case Command::predict: return "predict";
    case Command::inpaint: return "inpaint";
    case Command::synth: return "synth";
    case Command::spectrum: return "spectrum";
    case Command::stress: return "stress";
  }
  return "?";
}

Command command_from_string(const std::string& name) {
  for (Command c : {Command::train, Command::predict, Command::inpaint, Command::synth, Command::spectrum,
                    Command::stress})
    if (to_string(c) == name) return c;
  throw InputError("unknown command '" + name + "'");
}

std::vector<std::size_t> parse_shape(const std::string& text) {
  std::vector<std::size_t> shape;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, 'x')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(tok, &used);
      if (used != tok.size() || v < 2) throw InputError("");
      shape.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw InputError("bad grid shape '" + text + "'; expected e.g. 30x30x30 with every side >= 2");
    }
  }
  if (shape.empty()) throw InputError("empty grid shape");
  return shape;
}

nlohmann::json read_json_arg(const std::string& text) {
  if (!text.empty() && (text.front() == '{' || text.front() == '[')) return nlohmann::json::parse(text);
  std::ifstream in(text);
  if (!in) throw InputError("cannot open " + text);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(text + ": " + e.what());
  }
}

void Job::merge_json(const nlohmann::json& doc) {
  if (doc.contains("command")) command = command_from_string(doc.at("command").get<std::string>());
  if (doc.contains("inputs")) inputs = doc.at("inputs").get<std::vector<std::filesystem::path>>();
  if (doc.contains("input")) inputs = {doc.at("input").get<std::string>()};
  if (doc.contains("masks")) masks = doc.at("masks").get<std::vector<std::string>>();
  if (doc.contains("mask")) masks = {doc.at("mask").get<std::string>()};
  if (doc.contains("kernel")) {
    const auto& k = doc.at("kernel");
    kernel = k.is_string() ? k.get<std::string>() : k.dump();
  }
  // Training keys may appear at top level or under "train".
  nlohmann::json merged = train.to_json();
  bool touched = false;
  const nlohmann::json current = train.to_json();
  for (const auto& [key, value] : current.items()) {
    if (key != "kernel" && doc.contains(key)) {
      merged[key] = doc.at(key);
      touched = true;
    }
  }
  if (command != Command::synth && doc.contains("kernel") && doc.at("kernel").is_string()) {
    merged["kernel"] = doc.at("kernel");
    touched = true;
  }
  if (doc.contains("train")) {
    merged.merge_patch(doc.at("train"));
    touched = true;
  }
  if (touched) train = TrainConfig::from_json(merged);
  if (doc.contains("out")) out = doc.at("out").get<std::string>();
  if (doc.contains("format")) format = doc.at("format").get<std::string>();
  if (doc.contains("report")) report = doc.at("report").get<std::string>();
  if (doc.contains("truth")) truth = doc.at("truth").get<std::string>();
  if (doc.contains("truth_kernel")) {
    const auto& k = doc.at("truth_kernel");
    truth_kernel = k.is_string() ? k.get<std::string>() : k.dump();
  }
  if (doc.contains("grid")) {
    const auto& g = doc.at("grid");
    grid = g.is_string() ? parse_shape(g.get<std::string>()) : g.get<std::vector<std::size_t>>();
  }
  noise_var = doc.value("noise_var", noise_var);
  spectrum_points = doc.value("spectrum_points", spectrum_points);
  if (doc.contains("stress")) {
    const auto& s = doc.at("stress");
    stress.suite = s.value("suite", stress.suite);
    stress.sizes = s.value("sizes", stress.sizes);
    stress.components = s.value("components", stress.components);
    stress.train_ratio = s.value("train_ratio", stress.train_ratio);
    stress.repeats = s.value("repeats", stress.repeats);
    stress.texture_size = s.value("texture_size", stress.texture_size);
    stress.holes = s.value("holes", stress.holes);
    stress.baselines = s.value("baselines", stress.baselines);
    stress.include_gpatt = s.value("include_gpatt", stress.include_gpatt);
  }
}

nlohmann::json Job::to_json() const {
  nlohmann::json in = nlohmann::json::array();
  for (const auto& p : inputs) in.push_back(p.string());
  nlohmann::json doc{{"command", to_string(command)},
                     {"inputs", in},
                     {"masks", masks},
                     {"kernel", kernel},
                     {"train", train.to_json()},
                     {"out", out.string()},
                     {"format", format},
                     {"grid", grid},
                     {"noise_var", noise_var},
                     {"spectrum_points", spectrum_points},
                     {"stress",
                      {{"suite", stress.suite},
                       {"sizes", stress.sizes},
                       {"components", stress.components},
                       {"train_ratio", stress.train_ratio},
                       {"repeats", stress.repeats},
                       {"texture_size", stress.texture_size},
                       {"holes", stress.holes},
                       {"baselines", stress.baselines},
                       {"include_gpatt", stress.include_gpatt}}}};
  if (report) doc["report"] = report->string();
  if (truth) doc["truth"] = truth->string();
  if (truth_kernel) doc["truth_kernel"] = *truth_kernel;
  return doc;
}

void Job::validate() const {
  train.validate();
  const bool needs_input = command == Command::train || command == Command::predict || command == Command::inpaint;
  if (needs_input && inputs.empty()) throw InputError(to_string(command) + " needs --input");
  if ((command == Command::predict || command == Command::spectrum) && !report)
    throw InputError(to_string(command) + " needs --report train_report.json");
  if (command == Command::synth && grid.empty()) throw InputError("synth needs --grid, e.g. 30x30x30");
  if (command == Command::synth && !(noise_var >= 0.0)) throw InputError("noise_var must be non-negative");
  if (command == Command::stress && stress.suite != "runtime" && stress.suite != "holesize")
    throw InputError("stress suite must be runtime or holesize");
  if (command == Command::stress && stress.suite == "runtime" &&
      (stress.sizes.size() < 2 || stress.components.empty() || !(stress.train_ratio > 0.0 && stress.train_ratio <= 1.0) ||
       stress.repeats == 0))
    throw InputError("runtime suite needs >= 2 sizes, components, repeats >= 1 and 0 < train_ratio <= 1");
  if (command == Command::spectrum && spectrum_points < 2) throw InputError("spectrum_points must be >= 2");
}

LoadedData load_observations(const std::filesystem::path& path, const std::string& format,
                             const std::vector<std::string>& masks) {
  const std::string fmt = resolve_format(path, format);
  if (fmt == "raster") {
    const Raster r = read_pnm(path);
    if (r.channels != 1) throw InputError(path.string() + " is RGB; use inpaint for multi-channel rasters");
    return {masked_grid(r.width, r.height, r.channel(0), std::vector<std::uint8_t>(r.width * r.height, 1), masks),
            r.width, r.height};
  }
  if (fmt == "csv") {
    CsvGrid g = read_csv_grid(path);
    if (g.width < 2 || g.height < 2) throw InputError(path.string() + ": csv grid needs at least 2x2 cells");
    return {masked_grid(g.width, g.height, std::move(g.values), std::move(g.present), masks), g.width, g.height};
  }
  if (!masks.empty()) throw InputError("masks apply only to raster and csv-grid inputs");
  if (fmt == "points") {
    const PointTable t = read_point_csv(path);
    return {complete_grid(t.points, t.targets), 0, 0};
  }
  if (fmt == "obs") return {read_observation_set(path), 0, 0};
  throw InputError("unknown format '" + fmt + "'");
}

}  // namespace gpatt::cli
