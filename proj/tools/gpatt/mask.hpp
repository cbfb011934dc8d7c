#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace gpatt::cli {

/// Builds a training mask (1 = observed, 0 = held out) for a width x height grid.
///
/// Each spec is either "rect:x0,y0,x1,y1" (half-open pixel box) or the path of
/// a PGM/PPM raster whose zero pixels are masked. Masked regions are unioned.
std::vector<std::uint8_t> resolve_mask(const std::vector<std::string>& specs, std::size_t width,
                                       std::size_t height);

/// Centered square hole covering `fraction` of the area (rounded to whole pixels).
std::vector<std::uint8_t> centered_hole(std::size_t width, std::size_t height, double fraction);

/// Indices where mask == 0.
std::vector<std::size_t> masked_indices(const std::vector<std::uint8_t>& mask);

}  // namespace gpatt::cli
