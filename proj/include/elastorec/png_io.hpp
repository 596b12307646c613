#pragma once

#include <string>

#include "elastorec/core.hpp"

namespace elastorec {

// 8-bit grayscale PNG with a linear window/level mapping. lo == hi requests
// the automatic window (1st-99th percentile).
void write_png_gray(const std::string& path, const std::vector<double>& img,
                    int width, int height, double lo = 0.0, double hi = 0.0);

} // namespace elastorec
