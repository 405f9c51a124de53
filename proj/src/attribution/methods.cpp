#include <cmath>

#include "attribex/attribution.hpp"
#include "attribex/errors.hpp"
#include "attribex/exact_sum.hpp"
#include "attribex/random.hpp"

namespace attribex {

Explanation make_explanation(Tensor relevance, std::string method, std::size_t target, std::optional<std::uint64_t> seed) {
  Explanation e;
  e.sum = exact_sum(relevance.data());
  e.relevance = std::move(relevance);
  e.method = std::move(method);
  e.target = target;
  e.seed = seed;
  return e;
}

nlohmann::json explanation_to_json(const Explanation& e) {
  nlohmann::json j;
  j["method"] = e.method;
  j["target"] = e.target;
  j["seed"] = e.seed ? nlohmann::json(*e.seed) : nlohmann::json(nullptr);
  j["shape"] = e.relevance.shape();
  nlohmann::json r = nlohmann::json::array();
  for (double v : e.relevance.data()) r.push_back(v);
  j["relevance"] = std::move(r);
  j["sum"] = e.sum;
  return j;
}

Explanation explanation_from_json(const nlohmann::json& doc) {
  try {
    Shape shape = doc.at("shape").get<Shape>();
    std::vector<double> r = doc.at("relevance").get<std::vector<double>>();
    std::optional<std::uint64_t> seed;
    if (doc.contains("seed") && !doc.at("seed").is_null()) seed = doc.at("seed").get<std::uint64_t>();
    return make_explanation(Tensor(std::move(shape), std::move(r)), doc.value("method", std::string{}),
                            doc.value("target", std::size_t{0}), seed);
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(-1, "", std::string("explanation file: ") + e.what());
  }
}

double rms(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

Explanation gradient_explanation(const Network& net, const Tensor& x, std::size_t target) {
  return make_explanation(net.gradient(x, target).reshaped(x.shape()), "gradient", target);
}

Explanation gradient_x_input(const Network& net, const Tensor& x, std::size_t target) {
  Tensor g = net.gradient(x, target).reshaped(x.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= x[i];
  return make_explanation(std::move(g), "gxi", target);
}

Explanation simple_taylor(const Network& net, const Tensor& x, const Tensor& root, std::size_t target) {
  if (root.size() != x.size()) throw InputShapeError("root shape " + shape_string(root.shape()) + " differs from input");
  Tensor g = net.gradient(root.reshaped(x.shape()), target).reshaped(x.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= x[i] - root[i];
  return make_explanation(std::move(g), "taylor", target);
}

Tensor smoothgrad(const Network& net, const Tensor& x, double sigma, std::size_t samples, std::uint64_t seed,
                  std::size_t target) {
  if (!(sigma >= 0.0)) throw ConfigError("smoothgrad sigma must be >= 0");
  if (samples == 0) throw ConfigError("smoothgrad needs at least one sample");
  if (sigma == 0.0) return net.gradient(x, target).reshaped(x.shape());
  Rng rng(seed);
  std::vector<double> acc(x.size(), 0.0);
  std::vector<double> noisy(x.size());
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < x.size(); ++i) noisy[i] = x[i] + sigma * rng.normal();
    const Tensor g = net.gradient(Tensor(x.shape(), noisy), target);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
  }
  for (double& v : acc) v /= static_cast<double>(samples);
  return Tensor(x.shape(), std::move(acc));
}

void IGConfig::validate(const Tensor& x) const {
  if (steps == 0) throw ConfigError("integrated gradients needs steps >= 1");
  if (samples == 0) throw ConfigError("integrated gradients needs samples >= 1");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("integrated gradients sigma must be >= 0");
  if (sigma == 0.0 && samples != 1) throw ConfigError("integrated gradients with sigma = 0 needs samples = 1");
  if (policy == RootPolicy::Fixed && (!root || root->size() != x.size()))
    throw ConfigError("fixed root policy needs a root shaped like the input");
}

IGConfig IGConfig::smooth_default(const Tensor& x, std::uint64_t seed) {
  IGConfig cfg;
  cfg.steps = 5;
  cfg.samples = 5;
  cfg.sigma = 0.01 * rms(x);
  cfg.policy = RootPolicy::RandomNearOrigin;
  cfg.seed = seed;
  if (cfg.sigma == 0.0) {
    cfg.samples = 1;
    cfg.policy = RootPolicy::Origin;
  }
  return cfg;
}

std::vector<Tensor> ig_roots(const Tensor& x, const IGConfig& cfg) {
  cfg.validate(x);
  std::vector<Tensor> roots;
  Rng rng(cfg.seed);
  for (std::size_t s = 0; s < cfg.samples; ++s) {
    switch (cfg.policy) {
      case RootPolicy::Origin:
        roots.emplace_back(x.shape());
        break;
      case RootPolicy::Fixed:
        roots.push_back(cfg.root->reshaped(x.shape()));
        break;
      case RootPolicy::RandomNearOrigin: {
        std::vector<double> r(x.size());
        for (double& v : r) v = cfg.sigma * rng.normal();
        roots.emplace_back(x.shape(), std::move(r));
        break;
      }
    }
  }
  return roots;
}

Explanation integrated_gradients(const Network& net, const Tensor& x, const IGConfig& cfg, std::size_t target) {
  net.check_input(x);
  const auto roots = ig_roots(x, cfg);
  std::vector<double> acc(x.size(), 0.0);
  std::vector<double> point(x.size());
  for (const Tensor& root : roots) {
    for (std::size_t t = 1; t <= cfg.steps; ++t) {
      const double alpha = (static_cast<double>(t) - 0.5) / static_cast<double>(cfg.steps);
      for (std::size_t i = 0; i < x.size(); ++i) point[i] = root[i] + alpha * (x[i] - root[i]);
      const Tensor g = net.gradient(Tensor(x.shape(), point), target);
      for (std::size_t i = 0; i < x.size(); ++i) acc[i] += (x[i] - root[i]) * g[i];
    }
  }
  const double norm = static_cast<double>(cfg.steps * cfg.samples);
  for (double& v : acc) v /= norm;
  const bool stochastic = cfg.policy == RootPolicy::RandomNearOrigin;
  return make_explanation(Tensor(x.shape(), std::move(acc)), stochastic ? "smooth-ig" : "ig", target,
                          stochastic ? std::optional<std::uint64_t>(cfg.seed) : std::nullopt);
}

}  // namespace attribex
