#include "gpatt/grid_io.hpp"

#include <bit>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "gpatt/errors.hpp"

namespace gpatt {

static_assert(std::endian::native == std::endian::little, "f64le encoding assumes a little-endian host");

nlohmann::json encode_mask_rle(const std::vector<std::uint8_t>& mask) {
  nlohmann::json runs = nlohmann::json::array();
  if (mask.empty()) return {{"first", true}, {"runs", runs}};
  bool current = mask.front() != 0;
  std::size_t run = 0;
  for (auto m : mask) {
    if ((m != 0) == current) {
      ++run;
    } else {
      runs.push_back(run);
      current = !current;
      run = 1;
    }
  }
  runs.push_back(run);
  return {{"first", mask.front() != 0}, {"runs", runs}};
}

std::vector<std::uint8_t> decode_mask_rle(const nlohmann::json& rle, std::size_t expected_size) {
  std::vector<std::uint8_t> mask;
  mask.reserve(expected_size);
  bool current = rle.at("first").get<bool>();
  for (const auto& r : rle.at("runs")) {
    const auto n = r.get<std::size_t>();
    if (n == 0) throw InputError("mask run lengths must be positive");
    mask.insert(mask.end(), n, current ? 1 : 0);
    current = !current;
  }
  if (mask.size() != expected_size) throw InputError("mask runs do not cover the grid");
  return mask;
}

nlohmann::json observation_header(const ObservationSet& obs, const std::string& values_path,
                                  ValueEncoding encoding) {
  return {
      {"format", "gpatt-grid"},
      {"version", 1},
      {"axes", obs.grid().axes()},
      {"mask", encode_mask_rle(obs.mask())},
      {"num_observed", obs.num_observed()},
      {"values",
       {{"encoding", encoding == ValueEncoding::csv ? "csv" : "f64le"}, {"path", values_path}}},
  };
}

void write_values(const std::filesystem::path& path, const Eigen::VectorXd& values,
                  ValueEncoding encoding) {
  if (encoding == ValueEncoding::csv) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << std::setprecision(17);
    for (Eigen::Index i = 0; i < values.size(); ++i) out << values[i] << '\n';
    if (!out) throw InputError("failed writing " + path.string());
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!out) throw InputError("failed writing " + path.string());
}

Eigen::VectorXd read_values(const std::filesystem::path& path, std::size_t expected_size,
                            ValueEncoding encoding) {
  Eigen::VectorXd values(static_cast<Eigen::Index>(expected_size));
  if (encoding == ValueEncoding::csv) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read " + path.string());
    std::size_t i = 0;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (i >= expected_size) throw InputError("value file has too many entries");
      values[static_cast<Eigen::Index>(i++)] = std::stod(line);
    }
    if (i != expected_size) throw InputError("value file has too few entries");
    return values;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(expected_size * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(expected_size * sizeof(double))) {
    throw InputError("value file is truncated");
  }
  return values;
}

void write_observation_set(const std::filesystem::path& header, const ObservationSet& obs,
                           ValueEncoding encoding) {
  auto values_name = header.stem().string() +
                     (encoding == ValueEncoding::csv ? ".values.csv" : ".values.bin");
  write_values(header.parent_path() / values_name, obs.values(), encoding);
  std::ofstream out(header);
  if (!out) throw InputError("cannot write " + header.string());
  out << observation_header(obs, values_name, encoding).dump(2) << '\n';
}

ObservationSet read_observation_set(const std::filesystem::path& header) {
  std::ifstream in(header);
  if (!in) throw InputError("cannot read " + header.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(header.string() + ": " + e.what());
  }
  if (doc.value("format", "") != "gpatt-grid") throw InputError("not a gpatt-grid header");
  Grid grid(doc.at("axes").get<std::vector<std::vector<double>>>());
  auto mask = decode_mask_rle(doc.at("mask"), grid.size());
  const auto& v = doc.at("values");
  const auto enc = v.at("encoding").get<std::string>() == "csv" ? ValueEncoding::csv
                                                                 : ValueEncoding::f64le;
  std::filesystem::path values_path = v.at("path").get<std::string>();
  if (values_path.is_relative()) values_path = header.parent_path() / values_path;
  auto values = read_values(values_path, grid.size(), enc);
  return ObservationSet(std::move(grid), std::move(values), std::move(mask));
}

}  // namespace gpatt
