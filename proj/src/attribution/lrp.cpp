#include <algorithm>
#include <cmath>

#include "attribex/attribution.hpp"
#include "attribex/errors.hpp"

namespace attribex {

namespace {

std::vector<double> map_values(std::span<const double> v, double (*fn)(double, double), double param) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = fn(v[i], param);
  return out;
}

double rho_gamma(double w, double g) { return w + g * std::max(0.0, w); }
double positive_part(double w, double) { return std::max(0.0, w); }
double negative_part(double w, double) { return std::min(0.0, w); }

// Four-step generalized rule: z = eps + f_rho(a), s = R / z, c = W_rho^T s,
// R_in = a * c.
std::vector<double> linear_rule(const Layer& layer, const Shape& in_shape, const Shape& lin_shape,
                                std::span<const double> a, std::span<const double> r_out, const Rule& rule) {
  const double g = rule.kind == Rule::Kind::Gamma ? rule.gamma : 0.0;
  const std::vector<double> w = map_values(layer.weights->data(), rho_gamma, g);
  std::vector<double> b;
  if (layer.bias) b = map_values(layer.bias->data(), rho_gamma, g);

  std::vector<double> z = ops::linear_forward(layer, in_shape, lin_shape, w, b, a);
  if (rule.kind == Rule::Kind::Epsilon) {
    double eps = rule.epsilon;
    if (rule.relative_epsilon) {
      double m = 0.0;
      for (double v : z) m += std::abs(v);
      eps *= m / static_cast<double>(z.size());
    }
    for (double& v : z) v += v >= 0.0 ? eps : -eps;
  }
  std::vector<double> s(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) s[k] = r_out[k] / stabilize(z[k]);
  std::vector<double> c = ops::linear_backward(layer, in_shape, lin_shape, w, s);
  for (std::size_t j = 0; j < c.size(); ++j) c[j] *= a[j];
  return c;
}

std::vector<double> zbox_rule(const Layer& layer, const Shape& in_shape, const Shape& lin_shape,
                              std::span<const double> x, std::span<const double> r_out, const Rule& rule) {
  std::vector<double> low, high;
  if (rule.low) {
    low = rule.low->values();
    high = rule.high->values();
  } else {
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    low.assign(x.size(), *mn);
    high.assign(x.size(), *mx);
  }
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(low[i] <= x[i] && x[i] <= high[i]))
      throw ConfigError("zb bounds violated at input " + std::to_string(i));

  const auto w = layer.weights->data();
  const std::vector<double> wp = map_values(w, positive_part, 0.0);
  const std::vector<double> wn = map_values(w, negative_part, 0.0);
  // Bias-free denominators: z_k is exactly the sum of the numerators.
  const auto zx = ops::linear_forward(layer, in_shape, lin_shape, w, {}, x);
  const auto zl = ops::linear_forward(layer, in_shape, lin_shape, wp, {}, low);
  const auto zh = ops::linear_forward(layer, in_shape, lin_shape, wn, {}, high);
  std::vector<double> s(zx.size());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = r_out[k] / stabilize(zx[k] - zl[k] - zh[k]);
  const auto cx = ops::linear_backward(layer, in_shape, lin_shape, w, s);
  const auto cl = ops::linear_backward(layer, in_shape, lin_shape, wp, s);
  const auto ch = ops::linear_backward(layer, in_shape, lin_shape, wn, s);
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = x[i] * cx[i] - low[i] * cl[i] - high[i] * ch[i];
  return r;
}

}  // namespace

Tensor relprop(const Network& net, std::size_t index, const Tensor& a_in, const Tensor& a_out, const Tensor& r_out,
               const Rule& rule, const Tensor&) {
  const Layer& layer = net.layers()[index];
  const Shape& in_shape = net.layer_input_shape(index);
  switch (layer.kind) {
    case LayerKind::ReLU:
      return r_out;
    case LayerKind::Flatten:
      return r_out.reshaped(in_shape);
    case LayerKind::MaxPool2D:
      return ops::backward(layer, in_shape, a_in, a_out, r_out);
    case LayerKind::AvgPool2D: {
      std::vector<double> s(r_out.size());
      for (std::size_t k = 0; k < s.size(); ++k) s[k] = r_out[k] / stabilize(a_out[k]);
      Tensor c = ops::backward(layer, in_shape, a_in, a_out, Tensor(a_out.shape(), std::move(s)));
      for (std::size_t j = 0; j < c.size(); ++j) c[j] *= a_in[j];
      return c;
    }
    case LayerKind::LogSumExpPool:
      // Soft-pool weights are the gradient of the pool, and sum to one per group.
      return ops::backward(layer, in_shape, a_in, a_out, r_out);
    case LayerKind::Dense:
    case LayerKind::Conv2D:
    case LayerKind::SoftMinHead: {
      const Shape lin = ops::linear_shape(layer, in_shape);
      std::vector<double> r_lin;
      if (layer.kind == LayerKind::SoftMinHead) {
        std::span<const double> b;
        if (layer.bias) b = layer.bias->data();
        const auto z = ops::linear_forward(layer, in_shape, lin, layer.weights->data(), b, a_in.data());
        r_lin = ops::soft_weights(z, -1, layer.beta);
        for (double& v : r_lin) v *= r_out[0];
      } else {
        r_lin = r_out.values();
      }
      std::vector<double> r = rule.kind == Rule::Kind::ZBox ? zbox_rule(layer, in_shape, lin, a_in.data(), r_lin, rule)
                                                            : linear_rule(layer, in_shape, lin, a_in.data(), r_lin, rule);
      return Tensor(in_shape, std::move(r));
    }
  }
  throw ConfigError("no relevance rule for layer kind");
}

Explanation lrp(const Network& net, const Tensor& x, const RuleMap& rules, std::size_t target) {
  net.check_target(target);
  rules.validate(net);
  const ActivationTrace trace = net.forward(x);
  Tensor r(trace.output().shape());
  r[target] = trace.output()[target];
  for (std::size_t i = net.layers().size(); i-- > 0;) {
    r = relprop(net, i, trace.activations[i], trace.activations[i + 1], r, rules.rule_for(i), trace.input());
  }
  return make_explanation(r.reshaped(x.shape()), "lrp", target);
}

Tensor bilrp(const Network& embed, const Tensor& x, const Tensor& x_prime, const RuleMap& rules) {
  if (x.size() != x_prime.size()) throw ConfigError("bilrp inputs differ in size");
  if (embed.layer_output_shape(embed.layers().size() - 1).size() != 1)
    throw ConfigError("bilrp needs a flat embedding output");
  const std::size_t m = embed.output_size();
  const std::size_t d = x.size();
  Tensor pairs(Shape{d, d});
  for (std::size_t c = 0; c < m; ++c) {
    const Tensor r = lrp(embed, x, rules, c).relevance;
    const Tensor rp = lrp(embed, x_prime, rules, c).relevance;
    for (std::size_t i = 0; i < d; ++i) {
      if (r[i] == 0.0) continue;
      for (std::size_t j = 0; j < d; ++j) pairs[i * d + j] += r[i] * rp[j];
    }
  }
  return pairs;
}

}  // namespace attribex
