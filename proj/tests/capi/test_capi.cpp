// Exercises the shared library through the C header only.
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "attribex/attribex.h"

namespace fs = std::filesystem;

namespace {

fs::path fixture_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("attribex_capi_" + std::to_string(::getpid()));
    fs::remove_all(d);
    static const struct Cleanup {
      fs::path dir;
      ~Cleanup() {
        std::error_code ec;
        fs::remove_all(dir, ec);
      }
    } cleanup{d};
    REQUIRE(ax_gen_fixtures(5, d.c_str()) == AX_OK);
    return d;
  }();
  return dir;
}

std::string fx(const char* name) { return (fixture_dir() / name).string(); }

struct Model {
  ax_model* m = nullptr;
  explicit Model(const std::string& path) { REQUIRE(ax_model_load(path.c_str(), &m) == AX_OK); }
  ~Model() { ax_model_free(m); }
};

struct Dataset {
  ax_dataset* d = nullptr;
  explicit Dataset(const std::string& path) { REQUIRE(ax_dataset_load(path.c_str(), &d) == AX_OK); }
  ~Dataset() { ax_dataset_free(d); }
};

std::string take(char* s) {
  std::string out(s);
  ax_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("version and errors") {
  CHECK(std::strlen(ax_version()) > 0);
  ax_model* m = nullptr;
  CHECK(ax_model_load("/nonexistent/model.json", &m) == AX_ERR_IO);
  CHECK(m == nullptr);
  CHECK(std::string(ax_last_error()).find("model.json") != std::string::npos);
  CHECK(ax_set_log_level("loud") == AX_ERR_VALIDATION);
  CHECK(ax_set_log_level("off") == AX_OK);
  CHECK(ax_forward(nullptr, nullptr, 0, nullptr, 0) == AX_ERR_VALIDATION);
}

TEST_CASE("model forward, gradient and shape") {
  Model model(fx("mlp_bias.json"));
  CHECK(ax_model_input_size(model.m) == 8);
  CHECK(ax_model_output_size(model.m) == 3);
  size_t dims[4], rank = 0;
  REQUIRE(ax_model_input_shape(model.m, dims, 4, &rank) == AX_OK);
  CHECK(rank == 1);
  CHECK(dims[0] == 8);

  std::vector<double> x(8, 0.3), y(3);
  REQUIRE(ax_forward(model.m, x.data(), 8, y.data(), 3) == AX_OK);
  CHECK(ax_forward(model.m, x.data(), 7, y.data(), 3) == AX_ERR_VALIDATION);
  CHECK(ax_forward(model.m, x.data(), 8, y.data(), 2) == AX_ERR_VALIDATION);

  // gradient against central differences
  std::vector<double> g(8);
  REQUIRE(ax_gradient(model.m, x.data(), 8, 1, g.data()) == AX_OK);
  for (size_t i = 0; i < 8; ++i) {
    std::vector<double> hi = x, lo = x, yh(3), yl(3);
    hi[i] += 1e-5;
    lo[i] -= 1e-5;
    ax_forward(model.m, hi.data(), 8, yh.data(), 3);
    ax_forward(model.m, lo.data(), 8, yl.data(), 3);
    CHECK(g[i] == doctest::Approx((yh[1] - yl[1]) / 2e-5).epsilon(1e-5));
  }
  CHECK(ax_gradient(model.m, x.data(), 8, 3, g.data()) == AX_ERR_VALIDATION);

  x[0] = 1e308;
  x[1] = 1e308;
  CHECK(ax_forward(model.m, x.data(), 8, y.data(), 3) == AX_ERR_NUMERICS);
}

TEST_CASE("model save round-trip") {
  Model model(fx("cnn_bias.json"));
  const std::string out = (fixture_dir() / "copy.json").string();
  REQUIRE(ax_model_save(model.m, out.c_str()) == AX_OK);
  Model back(out);
  std::vector<double> x(64);
  for (size_t i = 0; i < 64; ++i) x[i] = std::sin(static_cast<double>(i));
  std::vector<double> a(ax_model_output_size(model.m)), b(a.size());
  ax_forward(model.m, x.data(), 64, a.data(), a.size());
  ax_forward(back.m, x.data(), 64, b.data(), b.size());
  CHECK(a == b);
}

TEST_CASE("explain: LRP conservation through the C API") {
  Model model(fx("mlp_nobias.json"));
  Dataset ds(fx("mlp_data.json"));
  ax_explain_options opts;
  ax_explain_options_init(&opts);
  opts.rules = "lrp0";
  for (size_t n = 0; n < ax_dataset_size(ds.d); ++n) {
    const double* x = nullptr;
    size_t len = 0;
    REQUIRE(ax_dataset_sample(ds.d, n, &x, &len) == AX_OK);
    ax_explanation* e = nullptr;
    REQUIRE(ax_explain(model.m, x, len, &opts, &e) == AX_OK);
    std::vector<double> y(3);
    ax_forward(model.m, x, len, y.data(), 3);
    const double f = y[ax_explanation_target(e)];
    CHECK(std::abs(ax_explanation_sum(e) - f) <= 1e-6 * std::max(1.0, std::abs(f)));
    CHECK(std::string(ax_explanation_method(e)) == "lrp");
    CHECK(ax_explanation_size(e) == 8);
    ax_explanation_free(e);
  }
}

TEST_CASE("explain: stochastic methods need a seed") {
  Model model(fx("cnn_bias.json"));
  std::vector<double> x(64, 0.5);
  ax_explain_options opts;
  ax_explain_options_init(&opts);
  opts.method = "smooth-ig";
  ax_explanation* e = nullptr;
  CHECK(ax_explain(model.m, x.data(), 64, &opts, &e) == AX_ERR_VALIDATION);
  CHECK(std::string(ax_last_error()).find("seed") != std::string::npos);
  opts.has_seed = 1;
  opts.seed = 4;
  REQUIRE(ax_explain(model.m, x.data(), 64, &opts, &e) == AX_OK);
  ax_explanation* e2 = nullptr;
  REQUIRE(ax_explain(model.m, x.data(), 64, &opts, &e2) == AX_OK);
  CHECK(std::memcmp(ax_explanation_values(e), ax_explanation_values(e2), 64 * sizeof(double)) == 0);
  ax_explanation_free(e);
  ax_explanation_free(e2);
  opts.method = "telepathy";
  CHECK(ax_explain(model.m, x.data(), 64, &opts, &e) == AX_ERR_VALIDATION);
}

TEST_CASE("batch explain is thread-count independent and round-trips") {
  Model model(fx("cnn_bias.json"));
  Dataset ds(fx("cnn_data.json"));
  ax_explain_options opts;
  ax_explain_options_init(&opts);
  opts.method = "smoothgrad";
  opts.has_seed = 1;
  opts.seed = 11;
  opts.samples = 5;
  ax_batch *one = nullptr, *three = nullptr;
  REQUIRE(ax_explain_batch(model.m, ds.d, &opts, 1, &one) == AX_OK);
  REQUIRE(ax_explain_batch(model.m, ds.d, &opts, 3, &three) == AX_OK);
  REQUIRE(ax_batch_size(one) == ax_dataset_size(ds.d));
  for (size_t i = 0; i < ax_batch_size(one); ++i)
    CHECK(std::memcmp(ax_explanation_values(ax_batch_get(one, i)), ax_explanation_values(ax_batch_get(three, i)),
                      64 * sizeof(double)) == 0);

  const std::string path = (fixture_dir() / "batch.json").string();
  REQUIRE(ax_batch_save(one, path.c_str()) == AX_OK);
  ax_batch* back = nullptr;
  REQUIRE(ax_batch_load(path.c_str(), &back) == AX_OK);
  CHECK(ax_batch_size(back) == ax_batch_size(one));
  CHECK(std::memcmp(ax_explanation_values(ax_batch_get(back, 2)), ax_explanation_values(ax_batch_get(one, 2)),
                    64 * sizeof(double)) == 0);
  CHECK(ax_batch_get(back, 1000) == nullptr);
  ax_batch_free(back);
  ax_batch_free(one);
  ax_batch_free(three);
}

TEST_CASE("BiLRP conserves the embedding dot product") {
  Model embed(fx("embed_nobias.json"));
  Dataset ds(fx("embed_data.json"));
  const double *a = nullptr, *b = nullptr;
  size_t na = 0, nb = 0;
  ax_dataset_sample(ds.d, 0, &a, &na);
  ax_dataset_sample(ds.d, 1, &b, &nb);
  ax_explanation* e = nullptr;
  REQUIRE(ax_bilrp(embed.m, a, na, b, nb, "lrp0", &e) == AX_OK);
  CHECK(ax_explanation_size(e) == na * nb);
  std::vector<double> pa(4), pb(4);
  ax_forward(embed.m, a, na, pa.data(), 4);
  ax_forward(embed.m, b, nb, pb.data(), 4);
  double dot = 0.0;
  for (int m = 0; m < 4; ++m) dot += pa[m] * pb[m];
  CHECK(std::abs(ax_explanation_sum(e) - dot) <= 1e-6 * std::max(1.0, std::abs(dot)));
  ax_explanation_free(e);
}

TEST_CASE("pixel flip and flip dataset") {
  Model model(fx("planted_detector.json"));
  Dataset ds(fx("planted_data.json"));
  ax_flip_options fo;
  ax_flip_options_init(&fo);
  fo.step_size = 16;
  fo.target = 0;
  const double* x = nullptr;
  size_t n = 0;
  ax_dataset_sample(ds.d, 0, &x, &n);
  const size_t len = ax_flip_length(n, 16);
  CHECK(len == n / 16 + 1);
  std::vector<double> scores(len);
  double auc = 0.0;
  REQUIRE(ax_pixel_flip(model.m, x, n, nullptr, 3, &fo, nullptr, scores.data(), len, &auc) == AX_OK);
  std::vector<double> y(2);
  ax_forward(model.m, x, n, y.data(), 2);
  CHECK(scores[0] == y[0]);

  fo.impute = "mean";
  CHECK(ax_pixel_flip(model.m, x, n, nullptr, 3, &fo, nullptr, scores.data(), len, &auc) == AX_ERR_VALIDATION);
  REQUIRE(ax_pixel_flip(model.m, x, n, nullptr, 3, &fo, ds.d, scores.data(), len, &auc) == AX_OK);
  fo.impute = "zero";

  ax_explain_options eo;
  ax_explain_options_init(&eo);
  eo.target = 0;
  char* csv = nullptr;
  REQUIRE(ax_flip_dataset(model.m, ds.d, &eo, 0, &fo, 2, &csv) == AX_OK);
  const std::string text = take(csv);
  CHECK(text.rfind("sample,step,score\n", 0) == 0);
  CHECK(text.find("\nmean,auc,") != std::string::npos);
  CHECK(text.find("\n0,auc,") != std::string::npos);
}

TEST_CASE("file-size proxy, bench, spray, pool, verify") {
  std::vector<double> zero(64, 0.0), noise(64);
  for (size_t i = 0; i < 64; ++i) noise[i] = std::sin(37.0 * static_cast<double>(i * i));
  size_t bz = 0, bn = 0;
  REQUIRE(ax_filesize_proxy(zero.data(), 64, 16, &bz) == AX_OK);
  REQUIRE(ax_filesize_proxy(noise.data(), 64, 16, &bn) == AX_OK);
  CHECK(bz < bn);
  CHECK(ax_filesize_proxy(zero.data(), 64, 1, &bz) == AX_ERR_VALIDATION);

  Model model(fx("cnn_bias.json"));
  Dataset ds(fx("cnn_data.json"));
  ax_explain_options base;
  ax_explain_options_init(&base);
  base.has_seed = 1;
  base.seed = 1;
  char* json = nullptr;
  REQUIRE(ax_bench(model.m, ds.d, "lrp,gradient", 3, &base, &json) == AX_OK);
  const auto bench = nlohmann::json::parse(take(json));
  CHECK(bench["methods"].contains("lrp"));
  CHECK(bench["methods"].contains("gradient"));
  CHECK(ax_bench(model.m, ds.d, "lrp", 2, &base, &json) == AX_ERR_VALIDATION);

  ax_batch* b = nullptr;
  REQUIRE(ax_batch_load(fx("spray_explanations.json").c_str(), &b) == AX_OK);
  REQUIRE(ax_spray(b, -1.0, 2, 7, &json) == AX_OK);
  const auto sp = nlohmann::json::parse(take(json));
  std::ifstream lf(fx("spray_labels.json"));
  const auto truth = nlohmann::json::parse(lf).get<std::vector<size_t>>();
  const auto labels = sp["labels"].get<std::vector<size_t>>();
  REQUIRE(labels.size() == truth.size());
  size_t agree = 0;
  for (size_t i = 0; i < labels.size(); ++i) agree += labels[i] == truth[i];
  CHECK(std::max(agree, labels.size() - agree) == labels.size());

  REQUIRE(ax_pool(b, nullptr, &json) == AX_OK);
  const auto pooled = nlohmann::json::parse(take(json));
  CHECK(pooled["defect"] == 0.0);
  CHECK(ax_pool(b, R"({"features": [[0]]})", &json) == AX_ERR_VALIDATION);
  CHECK(ax_spray(b, -1.0, 1000, 7, &json) == AX_ERR_VALIDATION);
  ax_batch_free(b);

  int passed = 0;
  REQUIRE(ax_verify(0, 1, &json, &passed) == AX_OK);
  CHECK(passed == 1);
  CHECK(nlohmann::json::parse(take(json))["P4"]["status"] == "pass");
}

TEST_CASE("neuralization handles") {
  ax_kkm* k = nullptr;
  REQUIRE(ax_kkm_load(fx("kkm_three_cluster.json").c_str(), &k) == AX_OK);
  ax_model* net = nullptr;
  REQUIRE(ax_kkm_neuralize(k, 1, &net) == AX_OK);
  for (double a : {-1.0, 0.5, 2.0})
    for (double c : {-0.5, 1.0, 3.0}) {
      const double x[2] = {a, c};
      double direct = 0.0, out = 0.0;
      REQUIRE(ax_kkm_logit(k, x, 2, 1, &direct) == AX_OK);
      REQUIRE(ax_forward(net, x, 2, &out, 1) == AX_OK);
      CHECK(std::abs(out - direct) <= 1e-6 * std::max(1.0, std::abs(direct)));
    }
  CHECK(ax_kkm_neuralize(k, 3, &net) == AX_ERR_VALIDATION);
  ax_model_free(net);
  ax_kkm_free(k);

  Model cls(fx("mlp_bias.json"));
  ax_model* head = nullptr;
  REQUIRE(ax_neuralize_logit(cls.m, 2, 1.0, &head) == AX_OK);
  std::vector<double> x(8, 0.1), y(3);
  ax_forward(cls.m, x.data(), 8, y.data(), 3);
  double logit = 0.0;
  ax_forward(head, x.data(), 8, &logit, 1);
  const double p = std::exp(y[2]) / (std::exp(y[0]) + std::exp(y[1]) + std::exp(y[2]));
  CHECK(logit == doctest::Approx(std::log(p / (1 - p))).epsilon(1e-9));
  ax_model_free(head);
}

TEST_CASE("render through the C API") {
  Model model(fx("cnn_bias.json"));
  std::vector<double> x(64, 0.0);
  ax_explain_options opts;
  ax_explain_options_init(&opts);
  opts.method = "gradient";
  ax_explanation* e = nullptr;
  REQUIRE(ax_explain(model.m, x.data(), 64, &opts, &e) == AX_OK);
  const std::string path = (fixture_dir() / "e.ppm").string();
  REQUIRE(ax_render_ppm(e, 2, path.c_str()) == AX_OK);
  std::ifstream in(path, std::ios::binary);
  std::string head;
  std::getline(in, head);
  CHECK(head == "P6");
  CHECK(fs::file_size(path) == std::string("P6\n16 16\n255\n").size() + 16 * 16 * 3);
  ax_explanation_free(e);
}
