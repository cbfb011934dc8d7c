#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

namespace gpatt::cli {

/// 8-bit raster, row-major with interleaved channels (1 = gray, 3 = RGB).
struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> data;

  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c = 0) const {
    return data[(y * width + x) * channels + c];
  }
  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c = 0) { return data[(y * width + x) * channels + c]; }

  /// Channel c as doubles in grid order (x fastest, then y).
  Eigen::VectorXd channel(std::size_t c) const;
  /// Rounds and clamps to [0, 255].
  void set_channel(std::size_t c, const Eigen::VectorXd& values);
};

/// Binary PGM (P5) or PPM (P6) with maxval 255.
Raster read_pnm(const std::filesystem::path& path);
void write_pnm(const std::filesystem::path& path, const Raster& raster);

/// Comma-separated matrix, one row per y. Empty cells and "nan" are missing.
struct CsvGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  Eigen::VectorXd values;              ///< grid order, missing entries 0
  std::vector<std::uint8_t> present;  ///< 1 where a value was given
};

CsvGrid read_csv_grid(const std::filesystem::path& path);
void write_csv_grid(const std::filesystem::path& path, std::size_t width, std::size_t height,
                    const Eigen::VectorXd& values);

/// Rows of x_1, ..., x_P, target with an optional non-numeric header line.
struct PointTable {
  Eigen::MatrixXd points;
  std::vector<double> targets;
};

PointTable read_point_csv(const std::filesystem::path& path);

}  // namespace gpatt::cli
