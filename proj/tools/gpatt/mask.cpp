#include "gpatt/mask.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gpatt/errors.hpp"
#include "gpatt/raster.hpp"

namespace gpatt::cli {
namespace {

void apply_rect(const std::string& body, std::size_t width, std::size_t height, std::vector<std::uint8_t>& mask) {
  std::vector<long long> v;
  std::stringstream ss(body);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stoll(tok, &used));
      if (used != tok.size()) throw InputError("");
    } catch (const std::exception&) {
      throw InputError("bad rect coordinate '" + tok + "'");
    }
  }
  if (v.size() != 4) throw InputError("rect needs x0,y0,x1,y1");
  if (v[0] < 0 || v[1] < 0 || v[2] <= v[0] || v[3] <= v[1] || v[2] > static_cast<long long>(width) ||
      v[3] > static_cast<long long>(height))
    throw InputError("rect:" + body + " is empty or outside the " + std::to_string(width) + "x" +
                     std::to_string(height) + " raster");
  for (long long y = v[1]; y < v[3]; ++y)
    for (long long x = v[0]; x < v[2]; ++x) mask[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)] = 0;
}

}  // namespace

std::vector<std::uint8_t> resolve_mask(const std::vector<std::string>& specs, std::size_t width,
                                       std::size_t height) {
  std::vector<std::uint8_t> mask(width * height, 1);
  for (const auto& spec : specs) {
    if (spec.rfind("rect:", 0) == 0) {
      apply_rect(spec.substr(5), width, height, mask);
      continue;
    }
    const Raster r = read_pnm(spec);
    if (r.width != width || r.height != height)
      throw InputError("mask " + spec + " is " + std::to_string(r.width) + "x" + std::to_string(r.height) +
                       ", expected " + std::to_string(width) + "x" + std::to_string(height));
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x)
        if (r.at(x, y, 0) == 0) mask[y * width + x] = 0;
  }
  return mask;
}

std::vector<std::uint8_t> centered_hole(std::size_t width, std::size_t height, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw InputError("hole fraction must lie in [0, 1)");
  std::vector<std::uint8_t> mask(width * height, 1);
  const double scale = std::sqrt(fraction);
  const auto hw = static_cast<std::size_t>(std::lround(scale * static_cast<double>(width)));
  const auto hh = static_cast<std::size_t>(std::lround(scale * static_cast<double>(height)));
  const std::size_t x0 = (width - hw) / 2, y0 = (height - hh) / 2;
  for (std::size_t y = y0; y < y0 + hh; ++y)
    for (std::size_t x = x0; x < x0 + hw; ++x) mask[y * width + x] = 0;
  return mask;
}

std::vector<std::size_t> masked_indices(const std::vector<std::uint8_t>& mask) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (!mask[i]) out.push_back(i);
  return out;
}

}  // namespace gpatt::cli
