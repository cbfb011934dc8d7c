#include "gpatt/raster.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "gpatt/errors.hpp"

namespace gpatt::cli {
namespace {

std::string next_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

std::size_t parse_size(const std::string& tok, const std::filesystem::path& path) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) throw InputError("bad PNM header in " + path.string());
  return v;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  try {
    std::size_t used = 0;
    v = std::stod(s, &used);
    return used == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

Eigen::VectorXd Raster::channel(std::size_t c) const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(width * height));
  for (std::size_t i = 0; i < width * height; ++i) v[static_cast<Eigen::Index>(i)] = data[i * channels + c];
  return v;
}

void Raster::set_channel(std::size_t c, const Eigen::VectorXd& values) {
  if (static_cast<std::size_t>(values.size()) != width * height) throw ShapeError("channel size mismatch");
  for (std::size_t i = 0; i < width * height; ++i) {
    const double v = std::clamp(std::round(values[static_cast<Eigen::Index>(i)]), 0.0, 255.0);
    data[i * channels + c] = static_cast<std::uint8_t>(std::isnan(v) ? 0.0 : v);
  }
}

Raster read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  const std::string magic = next_token(in);
  Raster r;
  if (magic == "P5") {
    r.channels = 1;
  } else if (magic == "P6") {
    r.channels = 3;
  } else {
    throw InputError(path.string() + ": expected binary PGM (P5) or PPM (P6)");
  }
  r.width = parse_size(next_token(in), path);
  r.height = parse_size(next_token(in), path);
  const std::size_t maxval = parse_size(next_token(in), path);
  if (maxval != 255) throw InputError(path.string() + ": only 8-bit rasters (maxval 255) are supported");
  if (r.width == 0 || r.height == 0) throw InputError(path.string() + ": empty raster");
  r.data.resize(r.width * r.height * r.channels);
  in.read(reinterpret_cast<char*>(r.data.data()), static_cast<std::streamsize>(r.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(r.data.size())) throw InputError(path.string() + ": truncated pixel data");
  return r;
}

void write_pnm(const std::filesystem::path& path, const Raster& raster) {
  if (raster.channels != 1 && raster.channels != 3) throw ShapeError("raster must have 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << (raster.channels == 1 ? "P5" : "P6") << '\n' << raster.width << ' ' << raster.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(raster.data.data()), static_cast<std::streamsize>(raster.data.size()));
  if (!out) throw InputError("failed writing " + path.string());
}

CsvGrid read_csv_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    rows.push_back(split(line, ','));
  }
  if (rows.empty()) throw InputError(path.string() + ": no rows");
  CsvGrid g;
  g.height = rows.size();
  g.width = rows.front().size();
  g.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.width * g.height));
  g.present.assign(g.width * g.height, 0);
  for (std::size_t y = 0; y < g.height; ++y) {
    if (rows[y].size() != g.width) throw InputError(path.string() + ": ragged row " + std::to_string(y + 1));
    for (std::size_t x = 0; x < g.width; ++x) {
      double v = 0.0;
      const std::string& cell = rows[y][x];
      if (cell.empty() || cell == "nan" || cell == "NaN") continue;
      if (!parse_double(cell, v)) throw InputError(path.string() + ": bad number '" + cell + "'");
      if (!std::isfinite(v)) continue;
      g.values[static_cast<Eigen::Index>(y * g.width + x)] = v;
      g.present[y * g.width + x] = 1;
    }
  }
  return g;
}

void write_csv_grid(const std::filesystem::path& path, std::size_t width, std::size_t height,
                    const Eigen::VectorXd& values) {
  if (static_cast<std::size_t>(values.size()) != width * height) throw ShapeError("csv grid size mismatch");
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out.precision(17);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      if (x) out << ',';
      out << values[static_cast<Eigen::Index>(y * width + x)];
    }
    out << '\n';
  }
  if (!out) throw InputError("failed writing " + path.string());
}

PointTable read_point_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    std::vector<double> row(cells.size());
    bool ok = true;
    for (std::size_t i = 0; i < cells.size() && ok; ++i) ok = parse_double(cells[i], row[i]);
    if (!ok) {
      if (rows.empty() && lineno == 1) continue;  // header
      throw InputError(path.string() + ": bad row " + std::to_string(lineno));
    }
    if (row.size() < 2) throw InputError(path.string() + ": need at least one coordinate and a target");
    if (!rows.empty() && row.size() != rows.front().size())
      throw InputError(path.string() + ": ragged row " + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(path.string() + ": no data rows");
  const std::size_t P = rows.front().size() - 1;
  PointTable t;
  t.points.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(P));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t p = 0; p < P; ++p) t.points(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(p)) = rows[r][p];
    t.targets.push_back(rows[r][P]);
  }
  return t;
}

}  // namespace gpatt::cli
