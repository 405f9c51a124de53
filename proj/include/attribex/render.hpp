#pragma once

#include <array>
#include <string>

#include "attribex/tensor.hpp"

namespace attribex {

// Diverging red-white-blue colour for v in [-1, 1].
std::array<unsigned char, 3> diverging_color(double v);

// Binary PPM (P6). [H, W] maps directly, [C, H, W] is summed over channels,
// vectors become a single row. Scaled by max |R|; zero renders white.
std::string render_ppm(const Tensor& relevance, std::size_t upscale = 1);

}  // namespace attribex
