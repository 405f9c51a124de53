#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "attribex/network.hpp"

namespace attribex {

// Kernel k-means with Gaussian kernel exp(-gamma |x - x'|^2) and soft
// assignment sharpness beta.
struct KernelKMeansModel {
  double gamma = 1.0;
  double beta = 1.0;
  std::vector<double> normalizers;                          // Z_c
  std::vector<std::vector<std::vector<double>>> clusters;  // representatives per cluster
  std::size_t dim = 0;

  std::size_t cluster_count() const { return clusters.size(); }
  void validate() const;
};

nlohmann::json kkm_to_json(const KernelKMeansModel& model);
KernelKMeansModel kkm_from_json(const nlohmann::json& doc);
KernelKMeansModel load_kkm(const std::filesystem::path& path);

// log [ P(c|x) / (1 - P(c|x)) ] evaluated directly in the log domain.
double kkm_logit_direct(const KernelKMeansModel& model, std::span<const double> x, std::size_t cluster);

// Detection layer w_ij = 2 (x_i - x_j), b_ijk = |x_j|^2 - |x_i|^2 + (log Z_k - log Z_c) / gamma,
// then soft max-pool over i (gamma), soft min-pool over j (gamma), soft
// min-pool over k (beta) and a final scaling by beta.
// With absorb_bias the biases move into a weight column on an extra input
// feature that callers set to 1 (input dimension dim + 1).
Network kkm_neuralize(const KernelKMeansModel& model, std::size_t cluster, bool absorb_bias = false);

// Replaces the final Dense class-score layer by a SoftMinHead computing
// -1/beta log sum_{k != c} exp(-beta (w_c - w_k)^T a + ...). beta = 1 gives
// the exact log-odds of the softmax.
Network neuralize_logit(const Network& net, std::size_t cls, double beta = 1.0);

}  // namespace attribex
