#pragma once

#include <string>

#include "sonarmatch/image.hpp"

namespace sonarmatch {

/// Load an 8-bit PNG as GRAY or RGB; components scaled by 1/255.
/// Palette/alpha variants are expanded; 16-bit files are rejected.
Image load_png(const std::string& path);

/// Save a GRAY or RGB image as 8-bit PNG, rounding to the nearest level.
void save_png(const Image& img, const std::string& path);

} // namespace sonarmatch
