#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "attribex/attribution.hpp"

namespace attribex {

// N x d relevances, one row per sample.
struct RelevanceMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> values;
  std::vector<std::string> sample_ids;
  std::vector<std::string> feature_names;

  double at(std::size_t n, std::size_t i) const { return values[n * cols + i]; }
  static RelevanceMatrix from_explanations(const std::vector<Explanation>& explanations);
};

// Feature groups I and sample groups G, each a partition.
struct GroupSpec {
  std::vector<std::vector<std::size_t>> feature_groups;
  std::vector<std::vector<std::size_t>> sample_groups;

  void validate(std::size_t rows, std::size_t cols) const;
  static GroupSpec singletons(std::size_t rows, std::size_t cols);
  static GroupSpec whole(std::size_t rows, std::size_t cols);
  // {"features": [[...], ...], "samples": [[...], ...]}; a missing key means
  // one group covering everything.
  static GroupSpec from_json(const nlohmann::json& doc, std::size_t rows, std::size_t cols);
};

struct PooledRelevance {
  std::size_t feature_groups = 0, sample_groups = 0;
  std::vector<double> cells;  // [feature group][sample group], each exactly rounded
  double total = 0.0;         // exact sum over the cells' unrounded values
  double grand_total = 0.0;   // exact sum over every entry of R
  double defect() const { return total - grand_total; }
  nlohmann::json to_json() const;
};

PooledRelevance pool(const RelevanceMatrix& r, const GroupSpec& spec);

struct SprayResult {
  std::vector<std::vector<double>> normalized;
  std::vector<double> affinity;  // N x N
  std::vector<std::size_t> labels;
  std::vector<std::array<double, 2>> embedding;
  std::vector<double> eigenvalues;  // ascending
  nlohmann::json to_json() const;
};

// Gaussian blur truncated at radius ceil(3 sigma), per channel, with the
// kernel renormalized at the borders. Shape [H, W] or [C, H, W].
Tensor gaussian_blur(const Tensor& heatmap, double sigma);

// blur_sigma empty: 1 pixel for grid explanations, none for tabular ones.
SprayResult spray(const std::vector<Tensor>& explanations, std::optional<double> blur_sigma, std::size_t k,
                  std::uint64_t seed);

double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

}  // namespace attribex
