#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "attribex/analysis.hpp"
#include "attribex/errors.hpp"
#include "attribex/random.hpp"

namespace attribex {

namespace {

constexpr std::size_t kMaxNeighbors = 10;
constexpr std::size_t kRestarts = 20;
constexpr std::size_t kMaxLloyd = 100;

using Rows = std::vector<std::vector<double>>;

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> normalize_row(const Tensor& e, double sigma) {
  std::vector<double> v = sigma > 0.0 ? gaussian_blur(e, sigma).values() : e.values();
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x = norm > 0.0 ? x / norm : 0.0;
  return v;
}

// Symmetric kNN graph with weights exp(-d^2 / (sigma_i sigma_j)).
std::vector<double> affinity(const Rows& rows) {
  const std::size_t n = rows.size();
  std::vector<double> d2(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d2[i * n + j] = d2[j * n + i] = squared_distance(rows[i], rows[j]);

  const std::size_t knn = std::min(kMaxNeighbors, n - 1);
  std::vector<std::vector<std::size_t>> neighbors(n);
  std::vector<double> sigma(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) idx.push_back(j);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return d2[i * n + a] < d2[i * n + b]; });
    idx.resize(knn);
    std::vector<double> dist;
    for (std::size_t j : idx) dist.push_back(std::sqrt(d2[i * n + j]));
    sigma[i] = dist.empty() ? 0.0 : median(dist);
    neighbors[i] = std::move(idx);
  }
  std::vector<double> w(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : neighbors[i]) {
      const double d = d2[i * n + j];
      const double s = sigma[i] * sigma[j];
      const double v = d == 0.0 ? 1.0 : (s > 0.0 ? std::exp(-d / s) : 0.0);
      w[i * n + j] = w[j * n + i] = v;
    }
  }
  return w;
}

struct KMeansFit {
  std::vector<std::size_t> labels;
  double inertia = std::numeric_limits<double>::infinity();
};

KMeansFit kmeans_once(const Rows& pts, std::size_t k, Rng& rng) {
  const std::size_t n = pts.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx.begin(), idx.end());
  Rows centers;
  for (std::size_t c = 0; c < k; ++c) centers.push_back(pts[idx[c]]);

  KMeansFit fit;
  fit.labels.assign(n, k);
  for (std::size_t it = 0; it < kMaxLloyd; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = squared_distance(pts[i], centers[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = squared_distance(pts[i], centers[c]);
        if (d < bd) bd = d, best = c;
      }
      if (fit.labels[i] != best) fit.labels[i] = best, changed = true;
    }
    if (!changed) break;
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<double> sum(pts[0].size(), 0.0);
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (fit.labels[i] != c) continue;
        for (std::size_t f = 0; f < sum.size(); ++f) sum[f] += pts[i][f];
        ++count;
      }
      if (count == 0) continue;  // empty cluster keeps its center
      for (double& v : sum) v /= static_cast<double>(count);
      centers[c] = std::move(sum);
    }
  }
  fit.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) fit.inertia += squared_distance(pts[i], centers[fit.labels[i]]);
  return fit;
}

std::vector<std::size_t> canonical_labels(const std::vector<std::size_t>& labels) {
  std::map<std::size_t, std::size_t> remap;
  std::vector<std::size_t> out;
  for (std::size_t l : labels) {
    auto it = remap.try_emplace(l, remap.size()).first;
    out.push_back(it->second);
  }
  return out;
}

}  // namespace

Tensor gaussian_blur(const Tensor& heatmap, double sigma) {
  if (heatmap.rank() < 2 || heatmap.rank() > 3) throw ConfigError("blur needs a [H, W] or [C, H, W] explanation");
  if (!(sigma >= 0.0)) throw ConfigError("blur sigma must be >= 0");
  if (sigma == 0.0) return heatmap;
  const Shape& s = heatmap.shape();
  const std::size_t rows = s[s.size() - 2], cols = s[s.size() - 1], planes = heatmap.size() / (rows * cols);
  const long radius = static_cast<long>(std::ceil(3.0 * sigma));
  std::vector<double> kernel;
  for (long t = -radius; t <= radius; ++t) kernel.push_back(std::exp(-0.5 * t * t / (sigma * sigma)));

  auto pass = [&](const std::vector<double>& in, bool horizontal) {
    std::vector<double> out(in.size());
    for (std::size_t p = 0; p < planes; ++p)
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
          double acc = 0.0, wsum = 0.0;
          for (long t = -radius; t <= radius; ++t) {
            const long rr = static_cast<long>(r) + (horizontal ? 0 : t);
            const long cc = static_cast<long>(c) + (horizontal ? t : 0);
            if (rr < 0 || cc < 0 || rr >= static_cast<long>(rows) || cc >= static_cast<long>(cols)) continue;
            const double w = kernel[static_cast<std::size_t>(t + radius)];
            acc += w * in[(p * rows + static_cast<std::size_t>(rr)) * cols + static_cast<std::size_t>(cc)];
            wsum += w;
          }
          out[(p * rows + r) * cols + c] = acc / wsum;
        }
    return out;
  };
  return Tensor(s, pass(pass(heatmap.values(), true), false));
}

nlohmann::json SprayResult::to_json() const {
  nlohmann::json emb = nlohmann::json::array();
  for (const auto& e : embedding) emb.push_back({e[0], e[1]});
  return {{"labels", labels}, {"embedding", emb}, {"eigenvalues", eigenvalues}};
}

SprayResult spray(const std::vector<Tensor>& explanations, std::optional<double> blur_sigma, std::size_t k,
                  std::uint64_t seed) {
  const std::size_t n = explanations.size();
  if (k < 2) throw ConfigError("spray needs k >= 2");
  if (k > n) throw ConfigError("spray: k = " + std::to_string(k) + " exceeds the " + std::to_string(n) + " explanations");
  for (const Tensor& e : explanations)
    if (e.shape() != explanations.front().shape()) throw InputShapeError("explanations differ in shape");
  const bool grid = explanations.front().rank() >= 2;
  const double sigma = blur_sigma.value_or(grid ? 1.0 : 0.0);
  if (sigma > 0.0 && !grid) throw ConfigError("blur needs grid-shaped explanations");

  SprayResult res;
  for (const Tensor& e : explanations) res.normalized.push_back(normalize_row(e, sigma));
  res.affinity = affinity(res.normalized);

  Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(static_cast<long>(n), static_cast<long>(n));
  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += res.affinity[i * n + j];
    inv_sqrt_deg[i] = 1.0 / std::sqrt(deg > 0.0 ? deg : 1.0);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      lap(static_cast<long>(i), static_cast<long>(j)) -= inv_sqrt_deg[i] * res.affinity[i * n + j] * inv_sqrt_deg[j];

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
  if (solver.info() != Eigen::Success) throw NumericsError("Laplacian eigendecomposition did not converge");
  Eigen::MatrixXd vecs = solver.eigenvectors();
  for (long c = 0; c < vecs.cols(); ++c) {
    Eigen::Index at = 0;
    vecs.col(c).cwiseAbs().maxCoeff(&at);
    if (vecs(at, c) < 0.0) vecs.col(c) *= -1.0;
  }
  res.eigenvalues.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + n);

  const bool identical = std::all_of(res.normalized.begin(), res.normalized.end(),
                                     [&](const std::vector<double>& r) { return r == res.normalized.front(); });
  res.embedding.assign(n, {0.0, 0.0});
  if (identical) {
    res.labels.assign(n, 0);
    return res;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 2; ++c)
      if (c + 1 < n) res.embedding[i][c] = vecs(static_cast<long>(i), static_cast<long>(c + 1));

  // k smallest eigenvectors, rows scaled to unit length (Ng-Jordan-Weiss).
  // When the graph falls apart into components the null space is degenerate
  // and any single "nontrivial" vector can be an arbitrary mix, so the first
  // one is kept as well.
  Rows features(n, std::vector<double>(k));
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      features[i][c] = vecs(static_cast<long>(i), static_cast<long>(c));
      norm += features[i][c] * features[i][c];
    }
    norm = std::sqrt(norm);
    if (norm > 0.0)
      for (double& v : features[i]) v /= norm;
  }

  KMeansFit best;
  for (std::size_t r = 0; r < kRestarts; ++r) {
    Rng rng(mix_seed(seed, r));
    KMeansFit fit = kmeans_once(features, k, rng);
    if (fit.inertia < best.inertia) best = std::move(fit);
  }
  res.labels = canonical_labels(best.labels);
  return res;
}

double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  if (a.size() != b.size()) throw ConfigError("label vectors differ in length");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::map<std::pair<std::size_t, std::size_t>, double> table;
  std::map<std::size_t, double> ra, rb;
  for (std::size_t i = 0; i < n; ++i) {
    table[{a[i], b[i]}] += 1.0;
    ra[a[i]] += 1.0;
    rb[b[i]] += 1.0;
  }
  auto pairs = [](double m) { return m * (m - 1.0) / 2.0; };
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [key, m] : table) index += pairs(m);
  for (const auto& [key, m] : ra) sa += pairs(m);
  for (const auto& [key, m] : rb) sb += pairs(m);
  const double expected = sa * sb / pairs(static_cast<double>(n));
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace attribex
