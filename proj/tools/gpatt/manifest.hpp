#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace gpatt::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Reproduction record written as manifest.json in the output directory.
class Manifest {
 public:
  Manifest(std::string command, nlohmann::json config, std::uint64_t seed);

  void add_input(const std::filesystem::path& path);
  /// Records an artifact path relative to the output directory.
  void add_artifact(const std::string& name);
  const std::vector<std::string>& artifacts() const noexcept { return artifacts_; }

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& out_dir, bool complete, const std::string& error = {}) const;

 private:
  std::string command_;
  nlohmann::json config_;
  std::uint64_t seed_;
  nlohmann::json inputs_ = nlohmann::json::array();
  std::vector<std::string> artifacts_;
};

}  // namespace gpatt::cli
