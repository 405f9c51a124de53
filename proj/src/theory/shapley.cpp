#include <bit>
#include <cmath>
#include <memory>

#include "attribex/errors.hpp"
#include "attribex/exact_sum.hpp"
#include "attribex/theory.hpp"

namespace attribex {

namespace {

double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

std::vector<double> all_values(const CoalitionGame& game) {
  const std::uint32_t n = 1u << game.players;
  std::vector<double> v(n);
  for (std::uint32_t s = 0; s < n; ++s) {
    v[s] = game.value(s);
    if (!std::isfinite(v[s])) throw NumericsError("coalition value is not finite");
  }
  return v;
}

}  // namespace

CoalitionGame CoalitionGame::from_network(const Network& net, const Tensor& x, std::size_t target) {
  net.check_input(x);
  net.check_target(target);
  if (x.size() > kMaxShapleyPlayers) throw SizeError("coalition game limited to " + std::to_string(kMaxShapleyPlayers) + " players");
  CoalitionGame g;
  g.players = x.size();
  // the game owns its network so it can outlive the caller's copy
  auto owned = std::make_shared<const Network>(net);
  g.value = [owned, x, target](std::uint32_t mask) {
    Tensor masked = x;
    for (std::size_t i = 0; i < masked.size(); ++i)
      if (!(mask >> i & 1u)) masked[i] = 0.0;
    return owned->evaluate(masked, target);
  };
  return g;
}

ShapleyResult shapley_exact(const CoalitionGame& game) {
  const std::size_t d = game.players;
  if (d == 0) throw SizeError("game has no players");
  if (d > kMaxShapleyPlayers) throw SizeError("exact Shapley limited to " + std::to_string(kMaxShapleyPlayers) + " players");
  const auto v = all_values(game);
  std::vector<double> weight(d);
  for (std::size_t s = 0; s < d; ++s) weight[s] = 1.0 / (static_cast<double>(d) * binomial(d - 1, s));

  ShapleyResult res;
  res.phi.resize(d);
  const std::uint32_t full = (1u << d) - 1u;
  for (std::size_t i = 0; i < d; ++i) {
    const std::uint32_t bit = 1u << i;
    ExactSum acc;
    for (std::uint32_t s = 0; s <= full; ++s) {
      if (s & bit) continue;
      acc.add(weight[static_cast<std::size_t>(std::popcount(s))] * (v[s | bit] - v[s]));
    }
    res.phi[i] = acc.value();
  }
  ExactSum total;
  for (double p : res.phi) total.add(p);
  total.add(-(v[full] - v[0]));
  res.efficiency_defect = std::abs(total.value());
  return res;
}

namespace {

double interaction_from_values(const std::vector<double>& v, std::size_t d, std::size_t i, std::size_t j,
                               const std::vector<double>& weight) {
  const std::uint32_t bi = 1u << i, bj = 1u << j;
  const std::uint32_t full = (1u << d) - 1u;
  ExactSum acc;
  for (std::uint32_t s = 0; s <= full; ++s) {
    if (s & (bi | bj)) continue;
    const double delta = v[s | bi | bj] - v[s | bi] - v[s | bj] + v[s];
    acc.add(weight[static_cast<std::size_t>(std::popcount(s))] * delta);
  }
  return acc.value();
}

std::vector<double> interaction_weights(std::size_t d) {
  std::vector<double> w(d - 1);
  for (std::size_t s = 0; s + 2 <= d; ++s) w[s] = 1.0 / (2.0 * static_cast<double>(d - 1) * binomial(d - 2, s));
  return w;
}

void check_interaction_size(std::size_t d) {
  if (d < 2) throw SizeError("interaction needs at least two players");
  if (d > kMaxInteractionPlayers)
    throw SizeError("exact interaction limited to " + std::to_string(kMaxInteractionPlayers) + " players");
}

}  // namespace

double shapley_interaction(const CoalitionGame& game, std::size_t i, std::size_t j) {
  const std::size_t d = game.players;
  if (i == j) throw ConfigError("interaction needs i != j; main effects come from shapley_interaction_matrix");
  if (i >= d || j >= d) throw ConfigError("player index out of range");
  check_interaction_size(d);
  if (i > j) std::swap(i, j);
  return interaction_from_values(all_values(game), d, i, j, interaction_weights(d));
}

std::vector<double> shapley_interaction_matrix(const CoalitionGame& game) {
  const std::size_t d = game.players;
  check_interaction_size(d);
  const auto v = all_values(game);
  const auto w = interaction_weights(d);
  std::vector<double> m(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) m[i * d + j] = m[j * d + i] = interaction_from_values(v, d, i, j, w);
  const auto phi = shapley_exact(game).phi;
  for (std::size_t i = 0; i < d; ++i) {
    ExactSum main;
    main.add(phi[i]);
    for (std::size_t j = 0; j < d; ++j)
      if (j != i) main.add(-m[i * d + j]);
    m[i * d + i] = main.value();
  }
  return m;
}

}  // namespace attribex
