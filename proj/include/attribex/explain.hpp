#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "attribex/attribution.hpp"

namespace attribex {

// Method selection plus knobs, as exposed on the command line. Zero / empty
// fields mean "method default".
struct MethodSpec {
  std::string method = "lrp";  // occlusion gradient gxi smoothgrad ig smooth-ig lrp
  std::string rules = "composite";
  std::optional<std::size_t> target;  // empty: argmax of the output
  std::optional<std::uint64_t> seed;
  std::size_t steps = 0;
  std::size_t samples = 0;
  std::optional<double> sigma;
  std::size_t patch = 0;
  std::size_t stride = 0;
  double fill = 0.0;
};

const std::vector<std::string>& method_names();
bool method_is_stochastic(const MethodSpec& spec);

std::size_t argmax_target(const Network& net, const Tensor& x);

// Occlusion defaults: a quarter of the smaller grid side, half-patch stride;
// single features for tabular inputs.
OcclusionConfig occlusion_config(const Network& net, const MethodSpec& spec);

Explanation explain(const Network& net, const Tensor& x, const MethodSpec& spec);

// Sample n uses seed mix_seed(seed, n); output order follows input order for
// any thread count.
std::vector<Explanation> explain_batch(const Network& net, const std::vector<Tensor>& xs, const MethodSpec& spec,
                                       std::size_t threads);

}  // namespace attribex
