#include <doctest.h>

#include <bit>
#include <chrono>
#include <cmath>

#include "attribex/attribution.hpp"
#include "attribex/errors.hpp"
#include "attribex/fixtures.hpp"
#include "attribex/theory.hpp"
#include "../support/oracles.hpp"

using namespace attribex;

namespace {

CoalitionGame product_game() {
  // f = x1 * x2 at (1, 1) under zeroing
  return {2, [](std::uint32_t s) { return s == 3u ? 1.0 : 0.0; }};
}

CoalitionGame net_game(std::uint64_t seed, std::size_t d) {
  const Network net = random_mlp(seed, {d, 12, 12, 1}, true);
  Rng rng(mix_seed(seed, 3));
  const Tensor x = oracle::normal_tensor(rng, {d});
  return CoalitionGame::from_network(net, x, 0);
}

// Interaction index by direct subset enumeration with factorials.
double interaction_oracle(const CoalitionGame& g, std::size_t i, std::size_t j) {
  const std::size_t d = g.players;
  const auto fact = [](std::size_t n) { return std::tgamma(static_cast<double>(n) + 1.0); };
  double acc = 0.0;
  const std::uint32_t bi = 1u << i, bj = 1u << j;
  for (std::uint32_t s = 0; s < (1u << d); ++s) {
    if (s & (bi | bj)) continue;
    const std::size_t k = static_cast<std::size_t>(std::popcount(s));
    const double w = fact(k) * fact(d - 2 - k) / (2.0 * fact(d - 1));
    acc += w * (g.value(s | bi | bj) - g.value(s | bi) - g.value(s | bj) + g.value(s));
  }
  return acc;
}

}  // namespace

TEST_CASE("Shapley on hand examples") {
  const Network lin(Shape{2}, {Layer::dense(Tensor(Shape{1, 2}, {2, -1}))});
  const auto r = shapley_exact(CoalitionGame::from_network(lin, Tensor::vector({3, 4}), 0));
  CHECK(r.phi == std::vector<double>{6, -4});

  const auto p = shapley_exact(product_game());
  CHECK(p.phi == std::vector<double>{0.5, 0.5});
  CHECK(shapley_interaction(product_game(), 0, 1) == 0.5);

  // Dummy: f ignores x_2.
  const Network dummy(Shape{3}, {Layer::dense(Tensor(Shape{1, 3}, {1.5, -0.5, 0.0}))});
  CHECK(shapley_exact(CoalitionGame::from_network(dummy, Tensor::vector({1, 2, 3}), 0)).phi[2] == 0.0);
}

TEST_CASE("Shapley matches the permutation oracle") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto g = net_game(seed, 3 + seed % 4);
    const auto phi = shapley_exact(g).phi;
    CHECK(oracle::max_abs_diff(phi, oracle::shapley_by_permutations(g.players, g.value)) < 1e-12);
  }
}

TEST_CASE("Shapley axioms on 10 seeded games") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t d = 2 + seed % 9;  // 2..10
    const auto g = net_game(seed, d);
    const auto r = shapley_exact(g);
    const double target = g.value((1u << d) - 1) - g.value(0);
    CHECK(r.efficiency_defect < 1e-10);
    CHECK(std::abs(oracle::naive_sum(r.phi) - target) < 1e-10);

    // Symmetry: players 0 and 1 made interchangeable by symmetrising v.
    const auto swap01 = [](std::uint32_t s) {
      const std::uint32_t a = s & 1u, b = (s >> 1) & 1u;
      return (s & ~3u) | (a << 1) | b;
    };
    const CoalitionGame sym{d, [&](std::uint32_t s) { return g.value(s) + g.value(swap01(s)); }};
    const auto rs = shapley_exact(sym);
    CHECK(rs.phi[0] == rs.phi[1]);

    // Dummy: an extra player that changes nothing.
    const CoalitionGame padded{d + 1, [&](std::uint32_t s) { return g.value(s & ((1u << d) - 1)); }};
    CHECK(shapley_exact(padded).phi[d] == 0.0);

    // Linearity over two games.
    const auto h = net_game(mix_seed(seed, 77), d);
    const CoalitionGame sum{d, [&](std::uint32_t s) { return g.value(s) + h.value(s); }};
    const auto rg = shapley_exact(g).phi, rh = shapley_exact(h).phi, rsum = shapley_exact(sum).phi;
    for (std::size_t i = 0; i < d; ++i) CHECK(std::abs(rsum[i] - (rg[i] + rh[i])) < 1e-12);
  }
}

TEST_CASE("interaction index") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Network add = random_additive(seed, 6, 3);
    Rng rng(mix_seed(seed, 1));
    const auto g = CoalitionGame::from_network(add, oracle::normal_tensor(rng, {6}), 0);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = i + 1; j < 6; ++j) CHECK(std::abs(shapley_interaction(g, i, j)) < 1e-12);

    const auto h = net_game(seed, 5);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) {
        if (i == j) continue;
        CHECK(shapley_interaction(h, i, j) == shapley_interaction(h, j, i));
        CHECK(std::abs(shapley_interaction(h, i, j) - interaction_oracle(h, i, j)) < 1e-12);
      }
  }
  CHECK_THROWS_AS(shapley_interaction(product_game(), 1, 1), ConfigError);
}

TEST_CASE("interaction matrix diagonal holds main effects") {
  const auto g = net_game(4, 5);
  const auto m = shapley_interaction_matrix(g);
  const auto phi = shapley_exact(g).phi;
  REQUIRE(m.size() == 25);
  for (std::size_t i = 0; i < 5; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < 5; ++j)
      if (j != i) {
        CHECK(m[i * 5 + j] == m[j * 5 + i]);
        off += m[i * 5 + j];
      }
    CHECK(std::abs(m[i * 5 + i] - (phi[i] - off)) < 1e-12);
  }
}

TEST_CASE("player caps") {
  const CoalitionGame big{21, [](std::uint32_t) { return 0.0; }};
  CHECK_THROWS_AS(shapley_exact(big), SizeError);
  const CoalitionGame mid{17, [](std::uint32_t) { return 0.0; }};
  CHECK_THROWS_AS(shapley_interaction(mid, 0, 1), SizeError);
  const Network wide(Shape{21}, {Layer::dense(Tensor(Shape{1, 21}))});
  CHECK_THROWS_AS(CoalitionGame::from_network(wide, Tensor(Shape{21}), 0), SizeError);
}

TEST_CASE("proposition suite over seeds 0..9") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto report = verify_propositions(0, 9);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 60.0);
  CHECK(report.all_passed());

  const auto j = report.to_json();
  for (const char* name : {"P1", "P2", "P3", "P4"}) {
    REQUIRE(j.contains(name));
    CHECK(j[name]["status"] == "pass");
    CHECK(j[name]["seeds"].size() == 10);
    CHECK(j[name]["max_error"].get<double>() < j[name]["tolerance"].get<double>());
  }
  CHECK(j["P1"]["tolerance"] == 1e-8);
  CHECK(j["P2"]["tolerance"] == 1e-6);
  CHECK(j["P3"]["tolerance"] == 1e-8);
  CHECK(j["P4"]["tolerance"] == 1e-10);
  CHECK(j["T-additive-occlusion-shapley"]["status"] == "pass");
  for (const char* name : {"T-additive-taylor-shapley", "T-deep-occlusion-shapley", "T-deep-occlusion-taylor",
                           "T-deep-ig-shapley", "T-deep-lrp0-shapley", "T-deep-lrpgamma-taylor"}) {
    REQUIRE(j.contains(name));
    CHECK(j[name]["status"] == "pass");
    CHECK(j[name]["min_discrepancy"].get<double>() > j[name]["tolerance"].get<double>());
  }
}

TEST_CASE("report merge keeps the worst case and failing seeds") {
  PropositionCheck a{"P9", "x", true, 1e-9, 1e-8, true, {0}, {}};
  PropositionCheck b{"P9", "x", false, 5e-8, 1e-8, true, {1}, {1}};
  VerificationReport r{{a}};
  r.merge(VerificationReport{{b}});
  REQUIRE(r.checks.size() == 1);
  CHECK_FALSE(r.all_passed());
  CHECK(r.checks[0].max_error == 5e-8);
  CHECK(r.checks[0].seeds == std::vector<std::uint64_t>{0, 1});
  CHECK(r.checks[0].failed_seeds == std::vector<std::uint64_t>{1});
  CHECK(r.to_json()["P9"]["status"] == "fail");
}
