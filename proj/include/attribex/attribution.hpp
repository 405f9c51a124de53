#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "attribex/network.hpp"
#include "attribex/tensor.hpp"

namespace attribex {

// Relevance scores R_i shaped like the input, plus provenance.
struct Explanation {
  Tensor relevance;
  std::string method;
  std::size_t target = 0;
  std::optional<std::uint64_t> seed;
  double sum = 0.0;  // exactly rounded sum of relevance
};

Explanation make_explanation(Tensor relevance, std::string method, std::size_t target,
                             std::optional<std::uint64_t> seed = std::nullopt);

nlohmann::json explanation_to_json(const Explanation& e);
Explanation explanation_from_json(const nlohmann::json& doc);

// ---------------------------------------------------------------------------
// LRP rules

struct Rule {
  enum class Kind { Lrp0, Epsilon, Gamma, ZBox };
  Kind kind = Kind::Lrp0;
  double epsilon = 0.0;       // Epsilon: absolute value, or a factor of mean |z| when relative
  bool relative_epsilon = false;
  double gamma = 0.0;         // Gamma
  std::optional<Tensor> low;  // ZBox bounds; empty means "range of the input sample"
  std::optional<Tensor> high;

  static Rule lrp0() { return {}; }
  static Rule eps(double e, bool relative = false);
  static Rule gamma_rule(double g);
  static Rule zbox(std::optional<Tensor> low, std::optional<Tensor> high);
  static Rule zbox(double low, double high, const Shape& shape);

  std::string describe() const;
};

// Per-layer rule assignment; layers without an entry use `fallback`.
class RuleMap {
 public:
  RuleMap() = default;
  explicit RuleMap(Rule fallback) : fallback_(std::move(fallback)) {}

  RuleMap& set(std::size_t layer, Rule rule);
  const Rule& rule_for(std::size_t layer) const;
  const Rule& fallback() const { return fallback_; }
  const std::map<std::size_t, Rule>& entries() const { return entries_; }

  // ZBox only on the first weighted layer, which must see the raw input.
  void validate(const Network& net) const;

  // ZBox on the input layer, Gamma(0.25) on the lower half of the remaining
  // weighted layers, Epsilon(1e-6 * mean|z|) on the upper half, LRP-0 on the
  // last weighted layer.
  static RuleMap composite(const Network& net);
  // "lrp0", "eps=V", "gamma=V", "composite", "zb:L,H"
  static RuleMap parse(const std::string& spec, const Network& net);

 private:
  Rule fallback_;
  std::map<std::size_t, Rule> entries_;
};

inline constexpr double kStabilizer = 1e-12;

// den + sign(den) * 1e-12 when |den| < 1e-12, sign(0) = +1.
double stabilize(double den);

// One relevance step through layer `index` given its input/output activations.
Tensor relprop(const Network& net, std::size_t index, const Tensor& a_in, const Tensor& a_out, const Tensor& r_out,
               const Rule& rule, const Tensor& x);

Explanation lrp(const Network& net, const Tensor& x, const RuleMap& rules, std::size_t target);

// Pair relevance R[i, i'] = sum_m R^m_i(x) R^m_i'(x') for a dot-product
// similarity on the network's output embedding. Shape [d, d'].
Tensor bilrp(const Network& embed, const Tensor& x, const Tensor& x_prime, const RuleMap& rules);

// ---------------------------------------------------------------------------
// Occlusion

struct OcclusionConfig {
  std::size_t patch = 1;
  std::size_t stride = 1;
  double fill = 0.0;
};

Explanation occlusion(const Network& net, const Tensor& x, const OcclusionConfig& cfg, std::size_t target);

// ---------------------------------------------------------------------------
// Gradient family

Explanation gradient_explanation(const Network& net, const Tensor& x, std::size_t target);
Explanation gradient_x_input(const Network& net, const Tensor& x, std::size_t target);
// R_i = [grad f(root)]_i (x_i - root_i)
Explanation simple_taylor(const Network& net, const Tensor& x, const Tensor& root, std::size_t target);
Tensor smoothgrad(const Network& net, const Tensor& x, double sigma, std::size_t samples, std::uint64_t seed,
                  std::size_t target);

enum class RootPolicy { Origin, Fixed, RandomNearOrigin };

struct IGConfig {
  std::size_t steps = 5;
  std::size_t samples = 1;
  double sigma = 0.0;  // std of random roots
  RootPolicy policy = RootPolicy::Origin;
  std::optional<Tensor> root;  // RootPolicy::Fixed
  std::uint64_t seed = 0;

  void validate(const Tensor& x) const;
  // Five roots near the origin with sigma = 0.01 * rms(x), five steps each.
  static IGConfig smooth_default(const Tensor& x, std::uint64_t seed);
};

// The S roots the config draws for x, in the order the integration uses them.
std::vector<Tensor> ig_roots(const Tensor& x, const IGConfig& cfg);
Explanation integrated_gradients(const Network& net, const Tensor& x, const IGConfig& cfg, std::size_t target);

double rms(const Tensor& x);

}  // namespace attribex
