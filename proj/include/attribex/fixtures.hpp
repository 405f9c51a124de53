#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "attribex/neuralize.hpp"
#include "attribex/network.hpp"

namespace attribex {

// Dense ReLU network with layer widths widths[0] (input) ... widths.back()
// (output); He-scaled normal weights, optional N(0, 0.1^2) biases.
Network random_mlp(std::uint64_t seed, const std::vector<std::size_t>& widths, bool bias);

// Small convolutional net on [1, 8, 8] inputs with random weights.
Network random_cnn(std::uint64_t seed, bool bias);

// Input features that add up independently: f(x) = sum_i g_i(x_i) with each
// g_i a one-dimensional ReLU network, realised as a Dense-ReLU-Dense stack.
Network random_additive(std::uint64_t seed, std::size_t features, std::size_t units_per_feature);

// Handcrafted detector for a plus-shaped pattern on [1, 16, 16] images.
// Output 0 scores "pattern present", output 1 scores background texture.
Network planted_detector();

inline constexpr std::size_t kPlantedSide = 16;

struct PlantedSample {
  Tensor x;
  std::vector<std::size_t> relevant;  // flat indices of the planted pattern
};

std::vector<PlantedSample> planted_samples(std::uint64_t seed, std::size_t count);

// Three well-separated clusters in 2-D, two or three representatives each.
KernelKMeansModel three_cluster_kkm(std::uint64_t seed);

struct StrategyDataset {
  std::vector<Tensor> explanations;  // [8, 8] heatmaps
  std::vector<std::size_t> labels;   // planted strategy per sample
};

// Relevance mass on the left half (strategy 0) or right half (strategy 1),
// plus noise; samples alternate between the strategies.
StrategyDataset two_strategy_explanations(std::uint64_t seed, std::size_t count);

// Writes every fixture under `dir`; byte-identical for equal seeds.
std::vector<std::filesystem::path> write_fixtures(std::uint64_t seed, const std::filesystem::path& dir);

}  // namespace attribex
