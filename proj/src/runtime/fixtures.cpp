#include "attribex/fixtures.hpp"

#include <cmath>

#include "attribex/attribution.hpp"
#include "attribex/io.hpp"
#include "attribex/random.hpp"

namespace attribex {

namespace {

Tensor normal_tensor(Rng& rng, Shape shape, double scale) {
  std::vector<double> v(shape_size(shape));
  for (double& e : v) e = scale * rng.normal();
  return Tensor(std::move(shape), std::move(v));
}

}  // namespace

Network random_mlp(std::uint64_t seed, const std::vector<std::size_t>& widths, bool bias) {
  Rng rng(seed);
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = widths[l], out = widths[l + 1];
    Tensor w = normal_tensor(rng, Shape{out, in}, std::sqrt(2.0 / static_cast<double>(in)));
    std::optional<Tensor> b;
    if (bias) b = normal_tensor(rng, Shape{out}, 0.1);
    layers.push_back(Layer::dense(std::move(w), std::move(b)));
    if (l + 2 < widths.size()) layers.push_back(Layer::relu());
  }
  return Network(Shape{widths.front()}, std::move(layers), bias ? "mlp-bias" : "mlp");
}

Network random_cnn(std::uint64_t seed, bool bias) {
  Rng rng(seed);
  std::vector<Layer> layers;
  auto b = [&](std::size_t n) -> std::optional<Tensor> {
    if (!bias) return std::nullopt;
    return normal_tensor(rng, Shape{n}, 0.1);
  };
  Tensor w1 = normal_tensor(rng, Shape{4, 1, 3, 3}, std::sqrt(2.0 / 9.0));
  layers.push_back(Layer::conv2d(std::move(w1), b(4), 1, 1));
  layers.push_back(Layer::relu());
  layers.push_back(Layer::max_pool(2, 2));
  Tensor w2 = normal_tensor(rng, Shape{6, 4, 3, 3}, std::sqrt(2.0 / 36.0));
  layers.push_back(Layer::conv2d(std::move(w2), b(6), 1, 0));
  layers.push_back(Layer::relu());
  layers.push_back(Layer::flatten());
  Tensor w3 = normal_tensor(rng, Shape{3, 24}, std::sqrt(2.0 / 24.0));
  layers.push_back(Layer::dense(std::move(w3), b(3)));
  return Network(Shape{1, 8, 8}, std::move(layers), bias ? "cnn-bias" : "cnn");
}

Network random_additive(std::uint64_t seed, std::size_t features, std::size_t units) {
  Rng rng(seed);
  const std::size_t hidden = features * units;
  Tensor w1(Shape{hidden, features});
  Tensor b1(Shape{hidden});
  Tensor w2(Shape{1, hidden});
  for (std::size_t i = 0; i < features; ++i)
    for (std::size_t u = 0; u < units; ++u) {
      const std::size_t h = i * units + u;
      w1[h * features + i] = rng.normal();
      b1[h] = 0.5 * rng.normal();
      w2[h] = rng.normal();
    }
  std::vector<Layer> layers;
  layers.push_back(Layer::dense(std::move(w1), std::move(b1)));
  layers.push_back(Layer::relu());
  layers.push_back(Layer::dense(std::move(w2)));
  return Network(Shape{features}, std::move(layers), "additive");
}

Network planted_detector() {
  // Channel 0 matches the plus shape; channel 1 is a fixed high-frequency
  // texture filter that reacts to the background.
  std::vector<double> w1 = {
      -0.5, 1.0, -0.5,  //
      1.0,  1.0, 1.0,   //
      -0.5, 1.0, -0.5,  //
      0.3,  -0.2, 0.25, //
      -0.3, 0.2,  -0.25, //
      0.2,  -0.3, 0.3,  //
  };
  std::vector<Layer> layers;
  layers.push_back(Layer::conv2d(Tensor(Shape{2, 1, 3, 3}, std::move(w1)), Tensor::vector({-3.5, 0.0}), 1, 1));
  layers.push_back(Layer::relu());
  layers.push_back(Layer::max_pool(2, 2));
  layers.push_back(Layer::flatten());
  const std::size_t pooled = 64;
  Tensor w2(Shape{2, 2 * pooled});
  for (std::size_t i = 0; i < pooled; ++i) {
    w2[i] = 1.0;
    w2[2 * pooled + pooled + i] = 1.0;
  }
  layers.push_back(Layer::dense(std::move(w2)));
  layers.push_back(Layer::relu());
  layers.push_back(Layer::dense(Tensor(Shape{2, 2}, {1.0, 0.05, 0.0, 1.0})));
  return Network(Shape{1, kPlantedSide, kPlantedSide}, std::move(layers), "planted-plus-detector",
                 {"plus", "texture"});
}

std::vector<PlantedSample> planted_samples(std::uint64_t seed, std::size_t count) {
  Rng rng(seed);
  std::vector<PlantedSample> out;
  const std::size_t n = kPlantedSide;
  for (std::size_t s = 0; s < count; ++s) {
    std::vector<double> img(n * n);
    for (double& v : img) v = rng.uniform(0.0, 0.3);
    const std::size_t r = 2 + rng.below(n - 4), c = 2 + rng.below(n - 4);
    std::vector<std::size_t> relevant = {(r - 1) * n + c, r * n + c - 1, r * n + c, r * n + c + 1, (r + 1) * n + c};
    for (auto i : relevant) img[i] = 1.0;
    out.push_back({Tensor(Shape{1, n, n}, std::move(img)), std::move(relevant)});
  }
  return out;
}

KernelKMeansModel three_cluster_kkm(std::uint64_t seed) {
  Rng rng(seed);
  KernelKMeansModel m;
  m.gamma = 1.0;
  m.beta = 2.0;
  m.dim = 2;
  const double centers[3][2] = {{0.0, 0.0}, {3.0, 0.0}, {1.5, 2.6}};
  for (const auto& c : centers) {
    const std::size_t reps = 2 + rng.below(2);
    std::vector<std::vector<double>> cluster;
    for (std::size_t r = 0; r < reps; ++r) cluster.push_back({c[0] + 0.3 * rng.normal(), c[1] + 0.3 * rng.normal()});
    m.normalizers.push_back(static_cast<double>(reps));
    m.clusters.push_back(std::move(cluster));
  }
  return m;
}

StrategyDataset two_strategy_explanations(std::uint64_t seed, std::size_t count) {
  Rng rng(seed);
  StrategyDataset ds;
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t strategy = s % 2;
    std::vector<double> r(64);
    for (std::size_t row = 0; row < 8; ++row)
      for (std::size_t col = 0; col < 8; ++col) {
        const bool on = strategy == 0 ? col < 4 : col >= 4;
        r[row * 8 + col] = (on ? rng.uniform(0.5, 1.0) : 0.0) + 0.05 * rng.normal();
      }
    ds.explanations.emplace_back(Shape{8, 8}, std::move(r));
    ds.labels.push_back(strategy);
  }
  return ds;
}

std::vector<std::filesystem::path> write_fixtures(std::uint64_t seed, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const nlohmann::json& doc) {
    const auto path = dir / name;
    write_text_file(path, dump_json(doc, true));
    written.push_back(path);
  };

  put("mlp_bias.json", model_to_json(random_mlp(mix_seed(seed, 1), {8, 16, 16, 3}, true)));
  put("mlp_nobias.json", model_to_json(random_mlp(mix_seed(seed, 2), {8, 16, 16, 3}, false)));
  put("cnn_bias.json", model_to_json(random_cnn(mix_seed(seed, 3), true)));
  put("cnn_nobias.json", model_to_json(random_cnn(mix_seed(seed, 4), false)));
  put("embed_nobias.json", model_to_json(random_mlp(mix_seed(seed, 5), {6, 8, 4}, false)));

  Rng rng(mix_seed(seed, 6));
  std::vector<Sample> mlp_data;
  for (int i = 0; i < 20; ++i) {
    std::vector<double> x(8);
    for (double& v : x) v = rng.normal();
    mlp_data.push_back({Tensor::vector(std::move(x)), std::nullopt});
  }
  put("mlp_data.json", dataset_to_json(mlp_data));
  std::vector<Sample> embed_data;
  for (int i = 0; i < 10; ++i) {
    std::vector<double> x(6);
    for (double& v : x) v = rng.normal();
    embed_data.push_back({Tensor::vector(std::move(x)), std::nullopt});
  }
  put("embed_data.json", dataset_to_json(embed_data));
  std::vector<Sample> img_data;
  for (int i = 0; i < 10; ++i) {
    std::vector<double> x(64);
    for (double& v : x) v = rng.uniform(0.0, 1.0);
    img_data.push_back({Tensor(Shape{1, 8, 8}, std::move(x)), std::nullopt});
  }
  put("cnn_data.json", dataset_to_json(img_data));

  put("planted_detector.json", model_to_json(planted_detector()));
  const auto planted = planted_samples(mix_seed(seed, 7), 50);
  std::vector<Sample> planted_data;
  nlohmann::json truth = nlohmann::json::array();
  for (const auto& p : planted) {
    planted_data.push_back({p.x, 0});
    truth.push_back(p.relevant);
  }
  put("planted_data.json", dataset_to_json(planted_data));
  put("planted_truth.json", nlohmann::json{{"relevant", truth}, {"shape", Shape{1, kPlantedSide, kPlantedSide}}});

  put("kkm_three_cluster.json", kkm_to_json(three_cluster_kkm(mix_seed(seed, 8))));

  const auto spray = two_strategy_explanations(mix_seed(seed, 9), 60);
  nlohmann::json expl = nlohmann::json::array();
  for (const auto& r : spray.explanations) expl.push_back(explanation_to_json(make_explanation(r, "planted", 0)));
  put("spray_explanations.json", expl);
  put("spray_labels.json", spray.labels);
  return written;
}

}  // namespace attribex
