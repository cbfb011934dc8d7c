#include "gpatt/manifest.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>

#include <Eigen/Core>
#include <openssl/evp.h>

#include "gpatt/errors.hpp"

namespace gpatt::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw InputError("sha256 unavailable");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    char b[3];
    std::snprintf(b, sizeof b, "%02x", md[i]);
    hex += b;
  }
  return hex;
}

Manifest::Manifest(std::string command, nlohmann::json config, std::uint64_t seed)
    : command_(std::move(command)), config_(std::move(config)), seed_(seed) {}

void Manifest::add_input(const std::filesystem::path& path) {
  inputs_.push_back({{"path", path.string()}, {"sha256", sha256_file(path)}});
}

void Manifest::add_artifact(const std::string& name) { artifacts_.push_back(name); }

nlohmann::json Manifest::to_json() const {
  return {{"command", command_},
          {"config", config_},
          {"seed", seed_},
          {"versions",
           {{"gpatt", kVersion},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"compiler", __VERSION__}}},
          {"inputs", inputs_},
          {"artifacts", artifacts_}};
}

void Manifest::write(const std::filesystem::path& out_dir, bool complete, const std::string& error) const {
  nlohmann::json doc = to_json();
  doc["complete"] = complete;
  if (!error.empty()) doc["error"] = error;
  std::ofstream out(out_dir / "manifest.json");
  out << doc.dump(2) << '\n';
  if (!out) throw InputError("failed writing manifest.json");
}

}  // namespace gpatt::cli
