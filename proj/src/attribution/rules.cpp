#include <cmath>
#include <cstdio>
#include <sstream>

#include "attribex/attribution.hpp"
#include "attribex/errors.hpp"

namespace attribex {

Rule Rule::eps(double e, bool relative) {
  if (!(e >= 0.0) || !std::isfinite(e)) throw ConfigError("epsilon must be finite and >= 0");
  Rule r;
  r.kind = Kind::Epsilon;
  r.epsilon = e;
  r.relative_epsilon = relative;
  return r;
}

Rule Rule::gamma_rule(double g) {
  if (!(g >= 0.0) || !std::isfinite(g)) throw ConfigError("gamma must be finite and >= 0");
  Rule r;
  r.kind = Kind::Gamma;
  r.gamma = g;
  return r;
}

Rule Rule::zbox(std::optional<Tensor> low, std::optional<Tensor> high) {
  if (low.has_value() != high.has_value()) throw ConfigError("zb needs both bounds or neither");
  Rule r;
  r.kind = Kind::ZBox;
  r.low = std::move(low);
  r.high = std::move(high);
  return r;
}

Rule Rule::zbox(double low, double high, const Shape& shape) {
  if (!(low <= high)) throw ConfigError("zb bounds need low <= high");
  return zbox(Tensor::filled(shape, low), Tensor::filled(shape, high));
}

std::string Rule::describe() const {
  char buf[64];
  switch (kind) {
    case Kind::Lrp0:
      return "lrp0";
    case Kind::Epsilon:
      std::snprintf(buf, sizeof buf, relative_epsilon ? "eps=%g*mean|z|" : "eps=%g", epsilon);
      return buf;
    case Kind::Gamma:
      std::snprintf(buf, sizeof buf, "gamma=%g", gamma);
      return buf;
    case Kind::ZBox:
      return low ? "zb" : "zb:auto";
  }
  return "?";
}

RuleMap& RuleMap::set(std::size_t layer, Rule rule) {
  entries_[layer] = std::move(rule);
  return *this;
}

const Rule& RuleMap::rule_for(std::size_t layer) const {
  auto it = entries_.find(layer);
  return it == entries_.end() ? fallback_ : it->second;
}

void RuleMap::validate(const Network& net) const {
  const auto weighted = net.weighted_layers();
  std::size_t first = weighted.empty() ? net.layers().size() : weighted.front();
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const Rule& r = rule_for(i);
    if (r.kind != Rule::Kind::ZBox || !net.layers()[i].weighted()) continue;
    if (i != first) throw ConfigError("zb rule assigned to layer " + std::to_string(i) + ", only the first weighted layer may use it");
    for (std::size_t p = 0; p < i; ++p)
      if (net.layers()[p].kind != LayerKind::Flatten)
        throw ConfigError("zb rule needs the first weighted layer to see the raw input");
    if (r.low && r.low->size() != net.input_size()) throw ConfigError("zb bounds do not match the input size");
  }
}

RuleMap RuleMap::composite(const Network& net) {
  RuleMap map(Rule::lrp0());
  const auto weighted = net.weighted_layers();
  const std::size_t m = weighted.size();
  for (std::size_t o = 0; o < m; ++o) {
    const std::size_t layer = weighted[o];
    if (o == 0) {
      bool raw_input = true;
      for (std::size_t p = 0; p < layer; ++p) raw_input = raw_input && net.layers()[p].kind == LayerKind::Flatten;
      map.set(layer, raw_input ? Rule::zbox(std::nullopt, std::nullopt) : Rule::gamma_rule(0.25));
    } else if (o + 1 == m) {
      map.set(layer, Rule::lrp0());
    } else if (2 * o < m) {
      map.set(layer, Rule::gamma_rule(0.25));
    } else {
      map.set(layer, Rule::eps(1e-6, true));
    }
  }
  return map;
}

namespace {
double parse_number(const std::string& s, const std::string& spec) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("bad number in rules '" + spec + "'");
  }
  if (pos != s.size()) throw ConfigError("bad number in rules '" + spec + "'");
  return v;
}
}  // namespace

RuleMap RuleMap::parse(const std::string& spec, const Network& net) {
  if (spec == "lrp0") return RuleMap(Rule::lrp0());
  if (spec == "composite") return composite(net);
  if (spec.rfind("eps=", 0) == 0) return RuleMap(Rule::eps(parse_number(spec.substr(4), spec)));
  if (spec.rfind("gamma=", 0) == 0) return RuleMap(Rule::gamma_rule(parse_number(spec.substr(6), spec)));
  if (spec.rfind("zb:", 0) == 0) {
    const auto body = spec.substr(3);
    const auto comma = body.find(',');
    if (comma == std::string::npos) throw ConfigError("zb rule needs 'zb:L,H'");
    const double lo = parse_number(body.substr(0, comma), spec);
    const double hi = parse_number(body.substr(comma + 1), spec);
    const auto weighted = net.weighted_layers();
    if (weighted.empty()) throw ConfigError("network has no weighted layer for zb");
    RuleMap map(Rule::lrp0());
    map.set(weighted.front(), Rule::zbox(lo, hi, net.input_shape()));
    map.validate(net);
    return map;
  }
  throw ConfigError("unknown rules '" + spec + "' (expected lrp0, eps=V, gamma=V, composite, zb:L,H)");
}

double stabilize(double den) {
  if (std::abs(den) < kStabilizer) return den + (den >= 0.0 ? kStabilizer : -kStabilizer);
  return den;
}

}  // namespace attribex
