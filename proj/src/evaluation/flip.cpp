#include <algorithm>
#include <numeric>

#include "attribex/errors.hpp"
#include "attribex/evaluation.hpp"
#include "attribex/random.hpp"

namespace attribex {

void ImputationPolicy::validate(const Tensor& x) const {
  if (kind == ImputeKind::DatasetMean && !mean) throw ConfigError("dataset-mean imputation needs a dataset");
  if (mean && mean->size() != x.size())
    throw ConfigError("dataset mean has " + std::to_string(mean->size()) + " features, input has " +
                      std::to_string(x.size()));
  if (kind == ImputeKind::NeighborMean) {
    if (x.rank() < 2) throw ConfigError("neighbor-mean imputation needs grid-shaped input");
    if (iterations == 0) throw ConfigError("neighbor-mean imputation needs at least one iteration");
  }
}

ImputationPolicy ImputationPolicy::parse(const std::string& name) {
  ImputationPolicy p;
  if (name == "zero") p.kind = ImputeKind::Zero;
  else if (name == "mean") p.kind = ImputeKind::DatasetMean;
  else if (name == "neighbor") p.kind = ImputeKind::NeighborMean;
  else throw ConfigError("unknown imputation '" + name + "' (zero, mean, neighbor)");
  return p;
}

Tensor dataset_mean(const std::vector<Tensor>& samples) {
  if (samples.empty()) throw ConfigError("dataset mean of an empty dataset");
  std::vector<double> m(samples.front().size(), 0.0);
  for (const Tensor& s : samples) {
    if (s.size() != m.size()) throw InputShapeError("dataset samples differ in size");
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += s[i];
  }
  for (double& v : m) v /= static_cast<double>(samples.size());
  return Tensor(samples.front().shape(), std::move(m));
}

Tensor impute(const Tensor& x, const std::vector<bool>& removed, const ImputationPolicy& policy) {
  policy.validate(x);
  std::vector<double> v = x.values();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (removed[i]) v[i] = policy.mean ? (*policy.mean)[i] : 0.0;
  if (policy.kind != ImputeKind::NeighborMean) return Tensor(x.shape(), std::move(v));

  const Shape& s = x.shape();
  const std::size_t rows = s[s.size() - 2], cols = s[s.size() - 1];
  const std::size_t planes = x.size() / (rows * cols);
  std::vector<double> next = v;
  for (std::size_t it = 0; it < policy.iterations; ++it) {
    for (std::size_t p = 0; p < planes; ++p)
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
          const std::size_t i = (p * rows + r) * cols + c;
          if (!removed[i]) continue;
          double sum = 0.0;
          int n = 0;
          if (r > 0) sum += v[i - cols], ++n;
          if (r + 1 < rows) sum += v[i + cols], ++n;
          if (c > 0) sum += v[i - 1], ++n;
          if (c + 1 < cols) sum += v[i + 1], ++n;
          next[i] = n ? sum / n : v[i];
        }
    v = next;
  }
  return Tensor(x.shape(), std::move(v));
}

double flip_auc(const std::vector<double>& scores) {
  if (scores.size() < 2) return scores.empty() ? 0.0 : 1.0;
  double area = 0.0;
  for (std::size_t i = 1; i < scores.size(); ++i) area += 0.5 * (scores[i - 1] + scores[i]);
  area /= static_cast<double>(scores.size() - 1);
  return scores[0] != 0.0 ? area / scores[0] : area;
}

std::vector<std::size_t> removal_order(const Tensor& relevance) {
  std::vector<std::size_t> order(relevance.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return relevance[a] > relevance[b]; });
  return order;
}

FlipCurve flip_in_order(const Network& net, const Tensor& x, const std::vector<std::size_t>& order,
                        const ImputationPolicy& policy, std::size_t step_size, std::size_t target) {
  net.check_input(x);
  net.check_target(target);
  policy.validate(x);
  if (step_size == 0) throw ConfigError("flip step size must be >= 1");
  if (order.size() != x.size()) throw InputShapeError("removal order does not cover the input");

  FlipCurve curve;
  curve.steps.push_back(0);
  curve.scores.push_back(net.evaluate(x, target));
  std::vector<bool> removed(x.size(), false);
  for (std::size_t done = 0; done < order.size();) {
    const std::size_t end = std::min(order.size(), done + step_size);
    for (; done < end; ++done) removed[order[done]] = true;
    curve.steps.push_back(done);
    curve.scores.push_back(net.evaluate(impute(x, removed, policy), target));
  }
  curve.auc = flip_auc(curve.scores);
  return curve;
}

FlipCurve pixel_flip(const Network& net, const Tensor& x, const Tensor& relevance, const ImputationPolicy& policy,
                     std::size_t step_size, std::size_t target) {
  if (relevance.size() != x.size())
    throw InputShapeError("explanation shape " + shape_string(relevance.shape()) + " differs from input " +
                          shape_string(x.shape()));
  return flip_in_order(net, x, removal_order(relevance), policy, step_size, target);
}

FlipCurve random_flip_baseline(const Network& net, const Tensor& x, std::uint64_t seed, const ImputationPolicy& policy,
                               std::size_t step_size, std::size_t target) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());
  return flip_in_order(net, x, order, policy, step_size, target);
}

FlipCurve mean_curve(const std::vector<FlipCurve>& curves) {
  FlipCurve out;
  if (curves.empty()) return out;
  out.steps = curves.front().steps;
  out.scores.assign(out.steps.size(), 0.0);
  for (const FlipCurve& c : curves) {
    if (c.scores.size() != out.scores.size()) throw ConfigError("curves differ in length");
    for (std::size_t i = 0; i < c.scores.size(); ++i) out.scores[i] += c.scores[i];
    out.auc += c.auc;
  }
  const double n = static_cast<double>(curves.size());
  for (double& s : out.scores) s /= n;
  out.auc /= n;
  return out;
}

}  // namespace attribex
