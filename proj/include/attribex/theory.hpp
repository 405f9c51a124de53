#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "attribex/network.hpp"

namespace attribex {

inline constexpr std::size_t kMaxShapleyPlayers = 20;
inline constexpr std::size_t kMaxInteractionPlayers = 16;

// Cooperative game over `players` features. Coalitions are bit masks.
struct CoalitionGame {
  std::size_t players = 0;
  std::function<double(std::uint32_t)> value;

  // v(S) = f(x_S), features outside S set to zero.
  static CoalitionGame from_network(const Network& net, const Tensor& x, std::size_t target);
};

struct ShapleyResult {
  std::vector<double> phi;
  double efficiency_defect = 0.0;  // |sum phi - (v(P) - v(empty))|
};

// Exact enumeration of all 2^d coalitions. Each phi_i is summed exactly, so
// players with identical marginal contributions get bit-identical values.
ShapleyResult shapley_exact(const CoalitionGame& game);

// Pairwise interaction index with weight |S|! (d-2-|S|)! / (2 (d-1)!).
double shapley_interaction(const CoalitionGame& game, std::size_t i, std::size_t j);

// Full symmetric interaction matrix; the diagonal holds main effects
// phi_i - sum_{j != i} phi_ij.
std::vector<double> shapley_interaction_matrix(const CoalitionGame& game);

struct PropositionCheck {
  std::string name;
  std::string description;
  bool passed = true;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool expect_equal = true;  // false: a counterexample beyond tolerance is expected
  std::vector<std::uint64_t> seeds;
  std::vector<std::uint64_t> failed_seeds;
};

struct VerificationReport {
  std::vector<PropositionCheck> checks;

  bool all_passed() const;
  nlohmann::json to_json() const;
  void merge(const VerificationReport& other);
};

// Seeded instances of the four equivalence propositions and the
// method/framework table; see README for the list of checks.
VerificationReport verify_propositions(std::uint64_t seed);
VerificationReport verify_propositions(std::uint64_t first_seed, std::uint64_t last_seed);

}  // namespace attribex
