#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "attribex/explain.hpp"
#include "attribex/network.hpp"

namespace attribex {

enum class ImputeKind { Zero, DatasetMean, NeighborMean };

struct ImputationPolicy {
  ImputeKind kind = ImputeKind::Zero;
  std::size_t iterations = 10;   // neighbor-mean sweeps
  std::optional<Tensor> mean;    // dataset mean; also seeds neighbor-mean

  void validate(const Tensor& x) const;
  static ImputationPolicy parse(const std::string& name);  // zero | mean | neighbor
};

Tensor dataset_mean(const std::vector<Tensor>& samples);

// x with the flagged features replaced according to the policy. Unflagged
// features are copied untouched.
Tensor impute(const Tensor& x, const std::vector<bool>& removed, const ImputationPolicy& policy);

struct FlipCurve {
  std::vector<std::size_t> steps;  // features removed so far
  std::vector<double> scores;
  double auc = 0.0;
};

// Trapezoidal area over unit-spaced steps, divided by the step count and by
// scores[0] (left unnormalized when scores[0] == 0).
double flip_auc(const std::vector<double>& scores);

// Descending relevance, ties to the lower flat index.
std::vector<std::size_t> removal_order(const Tensor& relevance);

FlipCurve flip_in_order(const Network& net, const Tensor& x, const std::vector<std::size_t>& order,
                        const ImputationPolicy& policy, std::size_t step_size, std::size_t target);
FlipCurve pixel_flip(const Network& net, const Tensor& x, const Tensor& relevance, const ImputationPolicy& policy,
                     std::size_t step_size, std::size_t target);
FlipCurve random_flip_baseline(const Network& net, const Tensor& x, std::uint64_t seed, const ImputationPolicy& policy,
                               std::size_t step_size, std::size_t target);

// Pointwise mean of equal-length curves; auc is the mean of the curves' aucs.
FlipCurve mean_curve(const std::vector<FlipCurve>& curves);

inline constexpr int kDefaultBins = 255;

// Relevance quantized to `bins` levels symmetric about 0 after max-abs
// scaling, one byte per feature, zlib level 9. Returns the compressed size.
std::size_t filesize_proxy(const Tensor& relevance, int bins = kDefaultBins);

struct BenchEntry {
  std::string name;
  std::vector<double> throughput;  // explanations per second, one per repetition
  double median = 0.0;
  double spread = 0.0;  // (max - min) / median
};

struct BenchReport {
  std::vector<BenchEntry> entries;
  nlohmann::json environment;
  nlohmann::json to_json() const;
};

struct BenchMethod {
  std::string name;
  MethodSpec spec;
};

// Single-threaded wall-clock throughput over all samples, median of
// `repetitions` runs.
BenchReport runtime_bench(const Network& net, const std::vector<Tensor>& samples, const std::vector<BenchMethod>& methods,
                          std::size_t repetitions);

}  // namespace attribex
