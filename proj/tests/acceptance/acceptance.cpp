// End-to-end acceptance checks. One line per criterion, non-zero exit if any
// of them fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "attribex/analysis.hpp"
#include "attribex/attribution.hpp"
#include "attribex/evaluation.hpp"
#include "attribex/explain.hpp"
#include "attribex/fixtures.hpp"
#include "attribex/neuralize.hpp"
#include "attribex/theory.hpp"
#include "../support/oracles.hpp"

using namespace attribex;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1 -------------------------------------------------------------------------
Outcome proposition_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto report = verify_propositions(0, 9);
  const double secs = seconds_since(t0);
  std::string worst;
  bool props = true;
  for (const auto& c : report.checks) {
    if (c.name.size() == 2 && c.name[0] == 'P') worst += c.name + "=" + fmt("%.1e ", c.max_error);
    props = props && c.passed;
  }
  return {props && secs < 60.0, worst + fmt("(%g checks, %.2f s)", static_cast<double>(report.checks.size()), secs)};
}

// 2 -------------------------------------------------------------------------
Outcome shapley_axioms() {
  double eff = 0.0, lin = 0.0;
  bool sym = true, dummy = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t d = 2 + seed % 9;
    const Network net = random_mlp(mix_seed(seed, 21), {d, 12, 12, 1}, true);
    const Network other = random_mlp(mix_seed(seed, 22), {d, 12, 12, 1}, true);
    Rng rng(mix_seed(seed, 23));
    const Tensor x = oracle::normal_tensor(rng, {d});
    const auto g = CoalitionGame::from_network(net, x, 0);
    const auto h = CoalitionGame::from_network(other, x, 0);
    eff = std::max(eff, shapley_exact(g).efficiency_defect);

    const auto swap01 = [](std::uint32_t s) { return (s & ~3u) | ((s & 1u) << 1) | ((s >> 1) & 1u); };
    const CoalitionGame sym_game{d, [&](std::uint32_t s) { return g.value(s) + g.value(swap01(s)); }};
    const auto ps = shapley_exact(sym_game).phi;
    sym = sym && ps[0] == ps[1];

    const CoalitionGame padded{d + 1, [&](std::uint32_t s) { return g.value(s & ((1u << d) - 1)); }};
    dummy = dummy && shapley_exact(padded).phi[d] == 0.0;

    const CoalitionGame sum{d, [&](std::uint32_t s) { return g.value(s) + h.value(s); }};
    const auto pg = shapley_exact(g).phi, ph = shapley_exact(h).phi, psum = shapley_exact(sum).phi;
    for (std::size_t i = 0; i < d; ++i) lin = std::max(lin, std::abs(psum[i] - (pg[i] + ph[i])));
  }
  double inter = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Network add = random_additive(mix_seed(seed, 24), 6, 3);
    Rng rng(mix_seed(seed, 25));
    const auto g = CoalitionGame::from_network(add, oracle::normal_tensor(rng, {6}), 0);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = i + 1; j < 6; ++j) inter = std::max(inter, std::abs(shapley_interaction(g, i, j)));
  }
  const CoalitionGame prod{2, [](std::uint32_t s) { return s == 3u ? 1.0 : 0.0; }};
  const double phi12 = shapley_interaction(prod, 0, 1);
  const bool ok = eff < 1e-10 && sym && dummy && lin < 1e-12 && inter < 1e-12 && phi12 == 0.5;
  return {ok, fmt("efficiency %.1e, linearity %.1e, additive interaction %.1e, phi12 %.3g", eff, lin, inter, phi12) +
                  (sym ? ", symmetry exact" : ", symmetry broken") + (dummy ? ", dummy exact" : ", dummy broken")};
}

// 3 -------------------------------------------------------------------------
Outcome lrp_conservation() {
  double worst = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Network net = seed % 2 ? random_cnn(mix_seed(seed, 31), false) : random_mlp(mix_seed(seed, 31), {8, 16, 16, 3}, false);
    Rng rng(mix_seed(seed, 32));
    const Tensor x = oracle::uniform_tensor(rng, net.input_shape(), -1, 1);
    const std::size_t t = argmax_target(net, x);
    const double f = net.evaluate(x, t);
    for (const Rule& rule : {Rule::lrp0(), Rule::gamma_rule(0.25)}) {
      const auto e = lrp(net, x, RuleMap(rule), t);
      worst = std::max(worst, std::abs(e.sum - f) / std::max(std::abs(f), 1e-300));
      ++count;
    }
  }
  return {worst < 1e-6, fmt("max relative defect %.2e over %g explanations", worst, static_cast<double>(count))};
}

// 4 -------------------------------------------------------------------------
Outcome ig_completeness() {
  const std::size_t Ts[] = {4, 8, 16, 32};
  double mean[4] = {0, 0, 0, 0};
  const int N = 100;
  for (std::uint64_t seed = 0; seed < N; ++seed) {
    const Network net = random_mlp(mix_seed(seed, 41), {6, 24, 24, 1}, true);
    Rng rng(mix_seed(seed, 42));
    const Tensor x = oracle::normal_tensor(rng, {6});
    const double target = net.evaluate(x, 0) - net.evaluate(Tensor(Shape{6}), 0);
    for (int k = 0; k < 4; ++k) {
      IGConfig cfg;
      cfg.steps = Ts[k];
      mean[k] += std::abs(integrated_gradients(net, x, cfg, 0).sum - target) / N;
    }
  }
  bool monotone = true;
  double ratio = 0.0;
  for (int k = 1; k < 4; ++k) {
    monotone = monotone && mean[k] < mean[k - 1];
    ratio += mean[k] / mean[k - 1] / 3.0;
  }
  return {monotone && ratio >= 0.35 && ratio <= 0.65,
          fmt("mean defect %.3g / %.3g / %.3g / %.3g", mean[0], mean[1], mean[2], mean[3]) +
              fmt(", mean ratio per doubling %.3f", ratio)};
}

// 5 -------------------------------------------------------------------------
Outcome gradient_check() {
  double worst = 0.0;
  std::size_t nets = 0;
  for (std::uint64_t seed = 0; nets < 20; ++seed) {
    const Network net = seed % 4 == 3 ? random_cnn(mix_seed(seed, 51), true)
                                      : random_mlp(mix_seed(seed, 51), {5 + seed % 4, 10, 10, 2}, true);
    Rng rng(mix_seed(seed, 52));
    Tensor x = oracle::uniform_tensor(rng, net.input_shape(), -1, 1);
    int tries = 0;
    while (oracle::kink_margin(net, x) < 1e-3 && tries++ < 50) x = oracle::uniform_tensor(rng, net.input_shape(), -1, 1);
    if (oracle::kink_margin(net, x) < 1e-3) continue;
    for (std::size_t t = 0; t < net.output_size(); ++t) {
      const auto g = net.gradient(x, t).values();
      const auto fd = oracle::finite_difference(net, x, t);
      worst = std::max(worst, oracle::rel_diff(g, fd));
    }
    ++nets;
  }
  return {worst < 1e-5, fmt("max relative difference %.2e over %g nets", worst, static_cast<double>(nets))};
}

// 6 -------------------------------------------------------------------------
Outcome faithfulness() {
  const auto t0 = std::chrono::steady_clock::now();
  const Network net = planted_detector();
  const auto samples = planted_samples(7, 50);
  const ImputationPolicy zero;
  const std::size_t step = 8;
  std::vector<FlipCurve> occ, sig, lrp_c, rnd;
  MethodSpec o, s, l;
  o.method = "occlusion";
  s.method = "smooth-ig";
  o.target = s.target = l.target = 0;
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const Tensor& x = samples[n].x;
    s.seed = mix_seed(7, n);
    occ.push_back(pixel_flip(net, x, explain(net, x, o).relevance, zero, step, 0));
    sig.push_back(pixel_flip(net, x, explain(net, x, s).relevance, zero, step, 0));
    lrp_c.push_back(pixel_flip(net, x, explain(net, x, l).relevance, zero, step, 0));
    rnd.push_back(random_flip_baseline(net, x, mix_seed(70, n), zero, step, 0));
  }
  const double base = mean_curve(rnd).auc;
  const double a = mean_curve(occ).auc, b = mean_curve(sig).auc, c = mean_curve(lrp_c).auc;
  const double secs = seconds_since(t0);
  const bool ok = a <= 0.8 * base && b <= 0.8 * base && c <= 0.8 * base && secs < 300.0;
  return {ok, fmt("AUC occlusion %.3f, smooth-IG %.3f, LRP %.3f, random %.3f", a, b, c, base) + fmt(" (%.1f s)", secs)};
}

// 7 -------------------------------------------------------------------------
Outcome filesize_ordering() {
  const Network net = planted_detector();
  int held = 0;
  std::string sizes;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto samples = planted_samples(mix_seed(seed, 71), 10);
    MethodSpec o, s, l;
    o.method = "occlusion";
    s.method = "smooth-ig";
    o.target = s.target = l.target = 0;
    double so = 0, sl = 0, ss = 0;
    for (std::size_t n = 0; n < samples.size(); ++n) {
      s.seed = mix_seed(seed, n);
      so += static_cast<double>(filesize_proxy(explain(net, samples[n].x, o).relevance));
      sl += static_cast<double>(filesize_proxy(explain(net, samples[n].x, l).relevance));
      ss += static_cast<double>(filesize_proxy(explain(net, samples[n].x, s).relevance));
    }
    held += so < sl && sl < ss;
    if (seed == 0) sizes = fmt("seed 0 mean bytes: occlusion %.1f, LRP %.1f, smooth-IG %.1f", so / 10, sl / 10, ss / 10);
  }
  return {held >= 9, fmt("ordering held on %g of 10 seeds; ", held) + sizes};
}

// 8 -------------------------------------------------------------------------
Outcome runtime_ordering() {
  const Network net = random_cnn(81, true);
  Rng rng(82);
  std::vector<Tensor> xs;
  for (int i = 0; i < 20; ++i) xs.push_back(oracle::uniform_tensor(rng, net.input_shape(), 0, 1));
  MethodSpec l, s, o;
  s.method = "smooth-ig";
  s.seed = 1;
  s.steps = 5;
  s.samples = 5;
  o.method = "occlusion";
  o.patch = 1;
  o.stride = 1;
  const auto rep = runtime_bench(net, xs, {{"lrp", l}, {"smooth-ig", s}, {"occlusion", o}}, 5);
  const double a = rep.entries[0].median, b = rep.entries[1].median, c = rep.entries[2].median;
  return {a > b && b > c, fmt("explanations/s: LRP %.0f, smooth-IG %.0f, occlusion %.0f", a, b, c)};
}

// 9 -------------------------------------------------------------------------
Outcome neuralization() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto m = three_cluster_kkm(mix_seed(seed, 91));
    for (std::size_t c = 0; c < m.cluster_count(); ++c) {
      const Network net = kkm_neuralize(m, c);
      Rng rng(mix_seed(seed, 92 + c));
      for (int n = 0; n < 100; ++n) {
        const std::vector<double> x = {rng.uniform(-2, 5), rng.uniform(-2, 4.5)};
        const double direct = kkm_logit_direct(m, x, c);
        worst = std::max(worst, oracle::rel_err(net.evaluate(Tensor(Shape{2}, x), 0), direct));
      }
    }
  }
  double gap = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Network net = random_mlp(mix_seed(seed, 93), {5, 12, 12, 4}, true);
    Rng rng(mix_seed(seed, 94));
    const Tensor x = oracle::normal_tensor(rng, {5});
    const Tensor z = net.forward(x).output();
    double hard = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < 4; ++k) hard = std::min(hard, z[0] - z[k]);
    gap = std::max(gap, std::abs(neuralize_logit(net, 0, 1e3).evaluate(x, 0) - hard));
  }
  return {worst < 1e-6 && gap < 1e-3, fmt("kkm max relative error %.2e, soft-min gap at beta 1e3 %.2e", worst, gap)};
}

// 10 ------------------------------------------------------------------------
Outcome bilrp_conservation() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Network net = random_mlp(mix_seed(seed, 101), {6, 8, 4}, false);
    Rng rng(mix_seed(seed, 102));
    const Tensor x = oracle::normal_tensor(rng, {6}), xp = oracle::normal_tensor(rng, {6});
    const Tensor a = net.forward(x).output(), b = net.forward(xp).output();
    double dot = 0.0;
    for (std::size_t m = 0; m < a.size(); ++m) dot += a[m] * b[m];
    const Tensor r = bilrp(net, x, xp, RuleMap(Rule::lrp0()));
    worst = std::max(worst, std::abs(oracle::naive_sum(r.values()) - dot) / std::max(std::abs(dot), 1e-300));
  }
  return {worst < 1e-6, fmt("max relative defect %.2e over 20 pairs", worst)};
}

// 11 ------------------------------------------------------------------------
Outcome spray_and_pooling() {
  const auto ds = two_strategy_explanations(111, 60);
  const auto res = spray(ds.explanations, std::nullopt, 2, 112);
  const double ari = adjusted_rand_index(res.labels, ds.labels);
  std::vector<Explanation> es;
  for (const auto& e : ds.explanations) es.push_back(make_explanation(e, "planted", 0));
  const auto r = RelevanceMatrix::from_explanations(es);
  GroupSpec spec;
  spec.feature_groups.resize(2);
  for (std::size_t i = 0; i < r.cols; ++i) spec.feature_groups[(i % 8) < 4 ? 0 : 1].push_back(i);
  spec.sample_groups.resize(2);
  for (std::size_t n = 0; n < r.rows; ++n) spec.sample_groups[ds.labels[n]].push_back(n);
  const auto pooled = pool(r, spec);
  return {ari >= 0.95 && pooled.defect() == 0.0, fmt("ARI %.3f, pooling defect %g", ari, pooled.defect())};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"proposition suite, seeds 0..9", proposition_suite},
      {"Shapley axioms and interactions", shapley_axioms},
      {"LRP conservation", lrp_conservation},
      {"IG completeness scaling", ig_completeness},
      {"gradient vs finite differences", gradient_check},
      {"pixel-flipping beats random", faithfulness},
      {"file-size proxy ordering", filesize_ordering},
      {"runtime ordering", runtime_ordering},
      {"neuralization", neuralization},
      {"BiLRP conservation", bilrp_conservation},
      {"SpRAy and pooling", spray_and_pooling},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s criterion %zu: %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
