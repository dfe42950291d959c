#pragma once

#include <string>

#include "nw/tensor.hpp"

namespace nw {

// Writes a binary (P5) PGM with maxval 255. The image must be [H,W] or
// [1,H,W] with every value in [0,1]; v maps to round(255*v), halves up.
void export_pgm(const Tensor& image, const std::string& path);

}  // namespace nw
