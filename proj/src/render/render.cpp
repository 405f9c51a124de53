#include "attribex/render.hpp"

#include <algorithm>
#include <cmath>

#include "attribex/errors.hpp"

namespace attribex {

std::array<unsigned char, 3> diverging_color(double v) {
  v = std::clamp(v, -1.0, 1.0);
  const auto fade = static_cast<unsigned char>(std::lround(255.0 * (1.0 - std::abs(v))));
  if (v >= 0.0) return {255, fade, fade};
  return {fade, fade, 255};
}

std::string render_ppm(const Tensor& relevance, std::size_t upscale) {
  if (upscale == 0) throw ConfigError("upscale must be >= 1");
  std::size_t rows = 1, cols = relevance.size();
  const Shape& s = relevance.shape();
  if (s.size() >= 2) {
    rows = s[s.size() - 2];
    cols = s[s.size() - 1];
  }
  std::vector<double> grid(rows * cols, 0.0);
  for (std::size_t i = 0; i < relevance.size(); ++i) grid[i % (rows * cols)] += relevance[i];
  double m = 0.0;
  for (double v : grid) m = std::max(m, std::abs(v));

  const std::size_t h = rows * upscale, w = cols * upscale;
  std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + 3 * h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double v = grid[(y / upscale) * cols + x / upscale];
      const auto c = diverging_color(m > 0.0 ? v / m : 0.0);
      out.append(reinterpret_cast<const char*>(c.data()), 3);
    }
  return out;
}

}  // namespace attribex
