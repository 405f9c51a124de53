#include "attribex/explain.hpp"

#include <algorithm>

#include "attribex/errors.hpp"
#include "attribex/parallel.hpp"
#include "attribex/random.hpp"

namespace attribex {

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {"occlusion", "gradient", "gxi", "smoothgrad", "ig", "smooth-ig", "lrp"};
  return names;
}

bool method_is_stochastic(const MethodSpec& spec) {
  if (spec.method == "smoothgrad" || spec.method == "smooth-ig") return spec.sigma.value_or(1.0) > 0.0;
  if (spec.method == "ig") return spec.sigma.value_or(0.0) > 0.0;
  return false;
}

std::size_t argmax_target(const Network& net, const Tensor& x) {
  const Tensor out = net.forward(x).output();
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i] > out[best]) best = i;
  return best;
}

OcclusionConfig occlusion_config(const Network& net, const MethodSpec& spec) {
  const Shape& s = net.input_shape();
  OcclusionConfig cfg;
  cfg.fill = spec.fill;
  if (s.size() >= 2) {
    const std::size_t side = std::min(s[s.size() - 2], s[s.size() - 1]);
    cfg.patch = std::max<std::size_t>(1, side / 4);
  }
  if (spec.patch) cfg.patch = spec.patch;
  cfg.stride = spec.stride ? spec.stride : std::max<std::size_t>(1, cfg.patch / 2);
  return cfg;
}

Explanation explain(const Network& net, const Tensor& x, const MethodSpec& spec) {
  net.check_input(x);
  const std::size_t target = spec.target ? *spec.target : argmax_target(net, x);
  net.check_target(target);
  if (method_is_stochastic(spec) && !spec.seed) throw ConfigError("method '" + spec.method + "' requires a seed");
  const std::uint64_t seed = spec.seed.value_or(0);

  if (spec.method == "occlusion") {
    Explanation e = occlusion(net, x, occlusion_config(net, spec), target);
    return e;
  }
  if (spec.method == "gradient") return gradient_explanation(net, x, target);
  if (spec.method == "gxi") return gradient_x_input(net, x, target);
  if (spec.method == "smoothgrad") {
    double sigma = spec.sigma.value_or(-1.0);
    if (sigma < 0.0) {
      const auto [lo, hi] = std::minmax_element(x.values().begin(), x.values().end());
      sigma = 0.15 * (*hi - *lo);
    }
    const std::size_t samples = spec.samples ? spec.samples : 25;
    Tensor g = smoothgrad(net, x, sigma, samples, seed, target);
    return make_explanation(std::move(g), "smoothgrad", target,
                            sigma > 0.0 ? std::optional<std::uint64_t>(seed) : std::nullopt);
  }
  if (spec.method == "ig" || spec.method == "smooth-ig") {
    IGConfig cfg;
    if (spec.method == "smooth-ig") {
      cfg = IGConfig::smooth_default(x, seed);
    } else {
      cfg.steps = 16;
    }
    if (spec.steps) cfg.steps = spec.steps;
    if (spec.sigma) {
      cfg.sigma = *spec.sigma;
      cfg.policy = cfg.sigma > 0.0 ? RootPolicy::RandomNearOrigin : RootPolicy::Origin;
      if (cfg.sigma > 0.0 && cfg.samples == 1 && !spec.samples) cfg.samples = 5;
      if (cfg.sigma == 0.0) cfg.samples = 1;
    }
    if (spec.samples) cfg.samples = spec.samples;
    cfg.seed = seed;
    return integrated_gradients(net, x, cfg, target);
  }
  if (spec.method == "lrp") {
    Explanation e = lrp(net, x, RuleMap::parse(spec.rules, net), target);
    return e;
  }
  if (spec.method == "bilrp") throw ConfigError("bilrp explains a pair of inputs, not a single sample");
  throw ConfigError("unknown method '" + spec.method + "'");
}

std::vector<Explanation> explain_batch(const Network& net, const std::vector<Tensor>& xs, const MethodSpec& spec,
                                       std::size_t threads) {
  std::vector<Explanation> out(xs.size());
  parallel_for(xs.size(), threads, [&](std::size_t n) {
    MethodSpec s = spec;
    if (spec.seed) s.seed = mix_seed(*spec.seed, n);
    out[n] = explain(net, xs[n], s);
  });
  return out;
}

}  // namespace attribex
