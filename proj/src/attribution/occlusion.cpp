#include "attribex/attribution.hpp"
#include "attribex/errors.hpp"

namespace attribex {

namespace {

// Spatial layout the patches slide over: [channels, rows, cols].
struct Grid {
  std::size_t channels = 1, rows = 1, cols = 1;
};

Grid grid_of(const Shape& s) {
  switch (s.size()) {
    case 1:
      return {1, 1, s[0]};
    case 2:
      return {1, s[0], s[1]};
    case 3:
      return {s[0], s[1], s[2]};
    default:
      return {1, 1, shape_size(s)};
  }
}

std::vector<std::size_t> offsets(std::size_t extent, std::size_t patch, std::size_t stride) {
  std::vector<std::size_t> out;
  for (std::size_t o = 0; o + patch <= extent; o += stride) out.push_back(o);
  return out;
}

}  // namespace

Explanation occlusion(const Network& net, const Tensor& x, const OcclusionConfig& cfg, std::size_t target) {
  net.check_input(x);
  net.check_target(target);
  if (cfg.stride == 0) throw ConfigError("occlusion stride must be >= 1");
  if (cfg.patch == 0) throw ConfigError("occlusion patch must be >= 1");
  const Grid g = grid_of(net.input_shape());
  const std::size_t patch_rows = g.rows == 1 ? 1 : cfg.patch;
  if (patch_rows > g.rows || cfg.patch > g.cols)
    throw ConfigError("occlusion patch " + std::to_string(cfg.patch) + " larger than input " + shape_string(net.input_shape()));

  const double base = net.evaluate(x, target);
  std::vector<double> score_sum(g.rows * g.cols, 0.0);
  std::vector<std::size_t> count(g.rows * g.cols, 0);
  std::vector<double> occluded(x.values());
  for (std::size_t r0 : offsets(g.rows, patch_rows, cfg.stride)) {
    for (std::size_t c0 : offsets(g.cols, cfg.patch, cfg.stride)) {
      occluded = x.values();
      for (std::size_t ch = 0; ch < g.channels; ++ch)
        for (std::size_t r = r0; r < r0 + patch_rows; ++r)
          for (std::size_t c = c0; c < c0 + cfg.patch; ++c) occluded[(ch * g.rows + r) * g.cols + c] = cfg.fill;
      const double score = base - net.evaluate(Tensor(x.shape(), occluded), target);
      for (std::size_t r = r0; r < r0 + patch_rows; ++r)
        for (std::size_t c = c0; c < c0 + cfg.patch; ++c) {
          score_sum[r * g.cols + c] += score;
          ++count[r * g.cols + c];
        }
    }
  }
  Tensor rel(x.shape());
  for (std::size_t ch = 0; ch < g.channels; ++ch)
    for (std::size_t p = 0; p < g.rows * g.cols; ++p)
      rel[ch * g.rows * g.cols + p] = count[p] ? score_sum[p] / static_cast<double>(count[p]) : 0.0;
  return make_explanation(std::move(rel), "occlusion", target);
}

}  // namespace attribex
