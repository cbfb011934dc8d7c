#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpatt/grid.hpp"

namespace gpatt {

enum class ValueEncoding { f64le, csv };

/// Run-length encoding of a boolean mask: {"first": <bool>, "runs": [n0, n1, ...]}.
/// Runs alternate starting from `first`; run lengths are positive and sum to N.
nlohmann::json encode_mask_rle(const std::vector<std::uint8_t>& mask);
std::vector<std::uint8_t> decode_mask_rle(const nlohmann::json& rle, std::size_t expected_size);

/// JSON header describing an observation set whose values live in `values_path`.
nlohmann::json observation_header(const ObservationSet& obs, const std::string& values_path,
                                  ValueEncoding encoding);

/// Writes `<header>` and its value file (`<stem>.values.bin` or `.values.csv`) side by side.
void write_observation_set(const std::filesystem::path& header, const ObservationSet& obs,
                           ValueEncoding encoding = ValueEncoding::f64le);
ObservationSet read_observation_set(const std::filesystem::path& header);

/// Writes N values in grid order, one per line (csv) or packed doubles (f64le).
void write_values(const std::filesystem::path& path, const Eigen::VectorXd& values,
                  ValueEncoding encoding);
Eigen::VectorXd read_values(const std::filesystem::path& path, std::size_t expected_size,
                            ValueEncoding encoding);

}  // namespace gpatt
