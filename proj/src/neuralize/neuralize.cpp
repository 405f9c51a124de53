#include "attribex/neuralize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "attribex/errors.hpp"
#include "attribex/io.hpp"

namespace attribex {

namespace {

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return s;
}

double log_sum_exp(std::vector<double> terms) {
  const double m = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(m)) return m;
  for (double& t : terms) t = std::exp(t - m);
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return m + std::log(s);
}

// log (Z_k^-1 sum_j K(x, x_j))
double log_density(const KernelKMeansModel& model, std::span<const double> x, std::size_t k) {
  std::vector<double> terms;
  for (const auto& rep : model.clusters[k]) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - rep[i]) * (x[i] - rep[i]);
    terms.push_back(-model.gamma * d2);
  }
  return log_sum_exp(std::move(terms)) - std::log(model.normalizers[k]);
}

}  // namespace

void KernelKMeansModel::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("kernel k-means gamma must be > 0");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("kernel k-means beta must be > 0");
  if (clusters.size() < 2) throw ConfigError("kernel k-means needs at least two clusters");
  if (normalizers.size() != clusters.size()) throw ConfigError("kernel k-means needs one normalizer per cluster");
  if (dim == 0) throw ConfigError("kernel k-means dim must be >= 1");
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    if (!(normalizers[c] > 0.0) || !std::isfinite(normalizers[c]))
      throw ConfigError("normalizer Z_" + std::to_string(c) + " must be > 0");
    if (clusters[c].empty()) throw ConfigError("cluster " + std::to_string(c) + " has no representatives");
    for (const auto& rep : clusters[c]) {
      if (rep.size() != dim) throw ConfigError("representative in cluster " + std::to_string(c) + " has wrong dimension");
      check_finite(rep, "representative");
    }
  }
}

nlohmann::json kkm_to_json(const KernelKMeansModel& model) {
  nlohmann::json j;
  j["gamma"] = model.gamma;
  j["beta"] = model.beta;
  j["Z"] = model.normalizers;
  j["dim"] = model.dim;
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto& c : model.clusters) {
    std::vector<double> flat;
    for (const auto& rep : c) flat.insert(flat.end(), rep.begin(), rep.end());
    clusters.push_back(flat);
  }
  j["clusters"] = std::move(clusters);
  return j;
}

KernelKMeansModel kkm_from_json(const nlohmann::json& doc) {
  KernelKMeansModel m;
  try {
    m.gamma = doc.at("gamma").get<double>();
    m.beta = doc.at("beta").get<double>();
    m.normalizers = doc.at("Z").get<std::vector<double>>();
    m.dim = doc.at("dim").get<std::size_t>();
    if (m.dim == 0) throw ConfigError("kernel k-means dim must be >= 1");
    for (const auto& c : doc.at("clusters")) {
      const auto flat = c.get<std::vector<double>>();
      if (flat.size() % m.dim != 0) throw ConfigError("cluster representatives not a multiple of dim");
      std::vector<std::vector<double>> reps;
      for (std::size_t o = 0; o < flat.size(); o += m.dim)
        reps.emplace_back(flat.begin() + static_cast<long>(o), flat.begin() + static_cast<long>(o + m.dim));
      m.clusters.push_back(std::move(reps));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(-1, "", std::string("kernel k-means file: ") + e.what());
  }
  m.validate();
  return m;
}

KernelKMeansModel load_kkm(const std::filesystem::path& path) { return kkm_from_json(read_json_file(path)); }

double kkm_logit_direct(const KernelKMeansModel& model, std::span<const double> x, std::size_t cluster) {
  model.validate();
  if (cluster >= model.cluster_count()) throw ConfigError("cluster index out of range");
  if (x.size() != model.dim) throw InputShapeError("kernel k-means expects " + std::to_string(model.dim) + " features");
  const double power = model.beta / model.gamma;
  const double own = power * log_density(model, x, cluster);
  std::vector<double> others;
  for (std::size_t k = 0; k < model.cluster_count(); ++k)
    if (k != cluster) others.push_back(power * log_density(model, x, k));
  const double logit = own - log_sum_exp(std::move(others));
  if (!std::isfinite(logit)) throw NumericsError("kernel sums vanished; logit is not finite");
  return logit;
}

Network kkm_neuralize(const KernelKMeansModel& model, std::size_t cluster, bool absorb_bias) {
  model.validate();
  if (cluster >= model.cluster_count()) throw ConfigError("cluster index out of range");
  const std::size_t d = model.dim;
  const std::size_t cols = absorb_bias ? d + 1 : d;
  const auto& own = model.clusters[cluster];
  std::vector<double> w, b;
  std::vector<std::size_t> max_groups, min_groups;
  for (std::size_t k = 0; k < model.cluster_count(); ++k) {
    if (k == cluster) continue;
    const double zterm = (std::log(model.normalizers[k]) - std::log(model.normalizers[cluster])) / model.gamma;
    for (const auto& xj : model.clusters[k]) {
      for (const auto& xi : own) {
        for (std::size_t e = 0; e < d; ++e) w.push_back(2.0 * (xi[e] - xj[e]));
        const double bias = squared_norm(xj) - squared_norm(xi) + zterm;
        if (absorb_bias)
          w.push_back(bias);
        else
          b.push_back(bias);
      }
      max_groups.push_back(own.size());
    }
    min_groups.push_back(model.clusters[k].size());
  }
  const std::size_t rows = w.size() / cols;
  std::vector<Layer> layers;
  layers.push_back(Layer::dense(Tensor(Shape{rows, cols}, std::move(w)),
                                absorb_bias ? std::nullopt : std::optional<Tensor>(Tensor::vector(std::move(b)))));
  layers.push_back(Layer::log_sum_exp_pool(std::move(max_groups), +1, model.gamma));
  layers.push_back(Layer::log_sum_exp_pool(std::move(min_groups), -1, model.gamma));
  layers.push_back(Layer::log_sum_exp_pool({model.cluster_count() - 1}, -1, model.beta));
  layers.push_back(Layer::dense(Tensor(Shape{1, 1}, {model.beta})));
  return Network(Shape{cols}, std::move(layers), "kkm-logit-" + std::to_string(cluster));
}

Network neuralize_logit(const Network& net, std::size_t cls, double beta) {
  if (!(beta > 0.0)) throw ConfigError("soft-min sharpness must be > 0");
  const auto& layers = net.layers();
  const auto weighted = net.weighted_layers();
  if (weighted.empty() || layers[weighted.back()].kind != LayerKind::Dense)
    throw ConfigError("final weighted layer must be Dense class scores");
  const std::size_t head = weighted.back();
  for (std::size_t i = head + 1; i < layers.size(); ++i)
    if (layers[i].kind != LayerKind::Flatten) throw ConfigError("class-score layer must be the last computing layer");
  const Tensor& W = *layers[head].weights;
  const std::size_t classes = W.shape()[0], n = W.shape()[1];
  if (classes < 2) throw ConfigError("logit neuralization needs at least two classes");
  if (cls >= classes) throw ConfigError("class index out of range");
  std::vector<double> rows, bias;
  for (std::size_t k = 0; k < classes; ++k) {
    if (k == cls) continue;
    for (std::size_t j = 0; j < n; ++j) rows.push_back(W[cls * n + j] - W[k * n + j]);
    if (layers[head].bias) bias.push_back((*layers[head].bias)[cls] - (*layers[head].bias)[k]);
  }
  std::vector<Layer> out(layers.begin(), layers.begin() + static_cast<long>(head));
  out.push_back(Layer::soft_min_head(Tensor(Shape{classes - 1, n}, std::move(rows)),
                                     bias.empty() ? std::nullopt : std::optional<Tensor>(Tensor::vector(std::move(bias))),
                                     beta));
  std::string label = net.labels().empty() ? "class " + std::to_string(cls) : net.labels()[cls];
  return Network(net.input_shape(), std::move(out), net.name() + "-logit", {"logit(" + label + ")"});
}

}  // namespace attribex
