#include <algorithm>
#include <cmath>
#include <limits>

#include "attribex/attribution.hpp"
#include "attribex/fixtures.hpp"
#include "attribex/random.hpp"
#include "attribex/theory.hpp"

namespace attribex {

namespace {

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs_diff(const Tensor& a, const std::vector<double>& b) {
  return max_abs_diff(a, Tensor::vector(b).reshaped(a.shape()));
}

double relative_diff(const Tensor& a, const Tensor& b) {
  const double scale = std::max(b.max_abs(), std::numeric_limits<double>::min());
  return max_abs_diff(a, b) / scale;
}

Tensor normal_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& e : v) e = rng.normal();
  return Tensor::vector(std::move(v));
}

PropositionCheck equality(std::string name, std::string description, double tolerance, std::uint64_t seed, double error) {
  PropositionCheck c;
  c.name = std::move(name);
  c.description = std::move(description);
  c.tolerance = tolerance;
  c.max_error = error;
  c.passed = error < tolerance;
  c.seeds = {seed};
  if (!c.passed) c.failed_seeds = {seed};
  return c;
}

PropositionCheck counterexample(std::string name, std::string description, double tolerance, std::uint64_t seed,
                                double discrepancy) {
  PropositionCheck c = equality(std::move(name), std::move(description), tolerance, seed, discrepancy);
  c.expect_equal = false;
  c.passed = discrepancy > tolerance;
  c.failed_seeds.clear();
  if (!c.passed) c.failed_seeds = {seed};
  return c;
}

constexpr double kTaylorEps = 1e-6;
constexpr double kCounterTol = 1e-3;

// P1 and the linear-model row of the table.
PropositionCheck check_linear(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 101));
  const std::size_t d = 6;
  Tensor w = normal_vector(rng, d).reshaped(Shape{1, d});
  const Network net(Shape{d}, {Layer::dense(w)}, "linear");
  const Tensor x = normal_vector(rng, d);

  const auto phi = shapley_exact(CoalitionGame::from_network(net, x, 0)).phi;
  const Tensor occ = occlusion(net, x, {1, 1, 0.0}, 0).relevance;
  const Tensor taylor = simple_taylor(net, x, Tensor(x.shape()), 0).relevance;
  IGConfig ig;
  ig.steps = 7;
  const Tensor igr = integrated_gradients(net, x, ig, 0).relevance;
  const Tensor lrp0 = lrp(net, x, RuleMap(Rule::lrp0()), 0).relevance;
  double err = 0.0;
  for (const Tensor* t : {&occ, &taylor, &igr, &lrp0}) err = std::max(err, max_abs_diff(*t, phi));
  return equality("P1", "linear model: occlusion-1 = Taylor at 0 = Shapley = IG from 0 = LRP-0", 1e-8, seed, err);
}

Network deep_relu(std::uint64_t seed, std::size_t inputs) {
  return random_mlp(seed, {inputs, 16, 16, 16, 1}, false);
}

// Input where the bias-free net is active, so the comparison is not vacuous.
Tensor active_input(const Network& net, Rng& rng) {
  Tensor x = normal_vector(rng, net.input_size());
  for (int tries = 0; tries < 50 && net.evaluate(x, 0) <= 0.0; ++tries) x = normal_vector(rng, net.input_size());
  return x;
}

PropositionCheck check_ig_taylor(std::uint64_t seed) {
  const Network net = deep_relu(mix_seed(seed, 201), 8);
  Rng rng(mix_seed(seed, 202));
  const Tensor x = active_input(net, rng);
  Tensor root = x;
  for (std::size_t i = 0; i < root.size(); ++i) root[i] *= kTaylorEps;
  IGConfig cfg;
  cfg.steps = 16;
  cfg.policy = RootPolicy::Fixed;
  cfg.root = root;
  const Tensor igr = integrated_gradients(net, x, cfg, 0).relevance;
  const Tensor taylor = simple_taylor(net, x, root, 0).relevance;
  return equality("P2", "bias-free ReLU net: IG on the segment (eps x, x] = Taylor at eps x", 1e-6, seed,
                  relative_diff(igr, taylor));
}

PropositionCheck check_lrp0_gxi(std::uint64_t seed) {
  const Network net = deep_relu(mix_seed(seed, 201), 8);
  Rng rng(mix_seed(seed, 203));
  const Tensor x = active_input(net, rng);
  const Tensor r = lrp(net, x, RuleMap(Rule::lrp0()), 0).relevance;
  const Tensor gxi = gradient_x_input(net, x, 0).relevance;
  Tensor root = x;
  for (std::size_t i = 0; i < root.size(); ++i) root[i] *= 1e-12;
  const Tensor taylor = simple_taylor(net, x, root, 0).relevance;
  const double err = std::max(relative_diff(r, gxi), relative_diff(r, taylor));
  return equality("P3", "bias-free ReLU net: LRP-0 = Gradient x Input = Taylor at eps x", 1e-8, seed, err);
}

// One layer, messages from the deep-Taylor root point on the line
// a - t a (1 + gamma 1[w >= 0]) versus the LRP-gamma redistribution.
double dtd_vs_lrp_gamma(Rng& rng, double gamma, bool positive_weights) {
  const std::size_t in = 8, out = 5;
  std::vector<double> w(out * in);
  for (double& e : w) e = positive_weights ? std::abs(rng.normal()) : rng.normal();
  std::vector<double> a(in), c(out);
  for (double& e : a) e = std::abs(rng.normal());
  for (double& e : c) e = 0.5 + rng.uniform();
  const Network layer(Shape{in}, {Layer::dense(Tensor(Shape{out, in}, w))}, "layer");

  std::vector<double> r_out(out);
  std::vector<double> messages(in, 0.0);
  for (std::size_t k = 0; k < out; ++k) {
    double ak = 0.0, zk = 0.0;
    for (std::size_t j = 0; j < in; ++j) {
      ak += a[j] * w[k * in + j];
      zk += a[j] * (w[k * in + j] + gamma * std::max(0.0, w[k * in + j]));
    }
    ak = std::max(0.0, ak);
    r_out[k] = ak * c[k];
    if (r_out[k] == 0.0) continue;
    const double t = r_out[k] / (c[k] * zk);
    for (std::size_t j = 0; j < in; ++j) {
      const double root = a[j] - t * a[j] * (1.0 + (w[k * in + j] >= 0.0 ? gamma : 0.0));
      messages[j] += w[k * in + j] * c[k] * (a[j] - root);
    }
  }
  const Tensor a_in = Tensor::vector(a);
  const Tensor a_out = layer.forward(a_in).output();
  const Tensor r = relprop(layer, 0, a_in, a_out, Tensor::vector(r_out), Rule::gamma_rule(gamma), a_in);
  return max_abs_diff(r, messages);
}

PropositionCheck check_dtd(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 301));
  double err = dtd_vs_lrp_gamma(rng, rng.uniform(), false);
  err = std::max(err, dtd_vs_lrp_gamma(rng, 0.0, false));
  err = std::max(err, dtd_vs_lrp_gamma(rng, 1.0, true));
  return equality("P4", "single layer: LRP-gamma = deep Taylor messages at the nearest root on the line", 1e-10, seed, err);
}

PropositionCheck check_additive(std::uint64_t seed, bool taylor) {
  const Network net = random_additive(mix_seed(seed, 401), 6, 3);
  Rng rng(mix_seed(seed, 402));
  double discrepancy = 0.0, equal_err = 0.0;
  for (int attempt = 0; attempt < 20; ++attempt) {
    const Tensor x = normal_vector(rng, 6);
    const auto phi = shapley_exact(CoalitionGame::from_network(net, x, 0)).phi;
    if (!taylor) {
      equal_err = std::max(equal_err, max_abs_diff(occlusion(net, x, {1, 1, 0.0}, 0).relevance, phi));
      if (attempt == 4) break;
      continue;
    }
    const Tensor t = simple_taylor(net, x, Tensor(x.shape()), 0).relevance;
    const Tensor p = Tensor::vector(phi);
    discrepancy = relative_diff(t, p);
    if (discrepancy > kCounterTol) break;
  }
  if (!taylor) return equality("T-additive-occlusion-shapley", "additive model: occlusion-1 = Shapley", 1e-8, seed, equal_err);
  return counterexample("T-additive-taylor-shapley", "additive model: Taylor at 0 differs from Shapley", kCounterTol, seed,
                        discrepancy);
}

// Deep rectifier rows of the table where no equivalence holds.
std::vector<PropositionCheck> check_deep_counterexamples(std::uint64_t seed) {
  struct Pair {
    const char* name;
    const char* description;
    double best = 0.0;
  };
  Pair pairs[] = {
      {"T-deep-occlusion-shapley", "deep ReLU net: occlusion-1 differs from Shapley"},
      {"T-deep-occlusion-taylor", "deep ReLU net: occlusion-1 differs from Taylor"},
      {"T-deep-ig-shapley", "deep ReLU net: IG differs from Shapley"},
      {"T-deep-lrp0-shapley", "deep ReLU net: LRP-0 differs from Shapley"},
      {"T-deep-lrpgamma-taylor", "deep ReLU net: LRP-gamma differs from Taylor"},
  };
  Rng rng(mix_seed(seed, 501));
  for (int attempt = 0; attempt < 20; ++attempt) {
    const Network net = deep_relu(mix_seed(seed, 502 + static_cast<std::uint64_t>(attempt)), 6);
    const Tensor x = active_input(net, rng);
    const Tensor phi = Tensor::vector(shapley_exact(CoalitionGame::from_network(net, x, 0)).phi);
    const Tensor occ = occlusion(net, x, {1, 1, 0.0}, 0).relevance;
    Tensor root = x;
    for (std::size_t i = 0; i < root.size(); ++i) root[i] *= kTaylorEps;
    const Tensor taylor = simple_taylor(net, x, root, 0).relevance;
    IGConfig cfg;
    cfg.steps = 16;
    const Tensor igr = integrated_gradients(net, x, cfg, 0).relevance;
    const Tensor l0 = lrp(net, x, RuleMap(Rule::lrp0()), 0).relevance;
    const Tensor lg = lrp(net, x, RuleMap(Rule::gamma_rule(0.25)), 0).relevance;
    const double found[] = {relative_diff(occ, phi), relative_diff(occ, taylor), relative_diff(igr, phi),
                            relative_diff(l0, phi), relative_diff(lg, taylor)};
    bool all = true;
    for (std::size_t p = 0; p < std::size(pairs); ++p) {
      pairs[p].best = std::max(pairs[p].best, found[p]);
      all = all && pairs[p].best > kCounterTol;
    }
    if (all) break;
  }
  std::vector<PropositionCheck> out;
  for (const auto& p : pairs) out.push_back(counterexample(p.name, p.description, kCounterTol, seed, p.best));
  return out;
}

}  // namespace

bool VerificationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const PropositionCheck& c) { return c.passed; });
}

void VerificationReport::merge(const VerificationReport& other) {
  for (const auto& c : other.checks) {
    auto it = std::find_if(checks.begin(), checks.end(), [&](const PropositionCheck& e) { return e.name == c.name; });
    if (it == checks.end()) {
      checks.push_back(c);
      continue;
    }
    it->passed = it->passed && c.passed;
    it->max_error = c.expect_equal ? std::max(it->max_error, c.max_error) : std::min(it->max_error, c.max_error);
    it->seeds.insert(it->seeds.end(), c.seeds.begin(), c.seeds.end());
    it->failed_seeds.insert(it->failed_seeds.end(), c.failed_seeds.begin(), c.failed_seeds.end());
  }
}

nlohmann::json VerificationReport::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& c : checks) {
    nlohmann::json e;
    e["status"] = c.passed ? "pass" : "fail";
    e["description"] = c.description;
    e[c.expect_equal ? "max_error" : "min_discrepancy"] = c.max_error;
    e["tolerance"] = c.tolerance;
    e["seeds"] = c.seeds;
    e["failed_seeds"] = c.failed_seeds;
    j[c.name] = std::move(e);
  }
  return j;
}

VerificationReport verify_propositions(std::uint64_t seed) {
  VerificationReport r;
  r.checks.push_back(check_linear(seed));
  r.checks.push_back(check_ig_taylor(seed));
  r.checks.push_back(check_lrp0_gxi(seed));
  r.checks.push_back(check_dtd(seed));
  r.checks.push_back(check_additive(seed, false));
  r.checks.push_back(check_additive(seed, true));
  for (auto& c : check_deep_counterexamples(seed)) r.checks.push_back(std::move(c));
  return r;
}

VerificationReport verify_propositions(std::uint64_t first_seed, std::uint64_t last_seed) {
  VerificationReport r;
  for (std::uint64_t s = first_seed; s <= last_seed; ++s) {
    r.merge(verify_propositions(s));
    if (s == UINT64_MAX) break;
  }
  return r;
}

}  // namespace attribex
