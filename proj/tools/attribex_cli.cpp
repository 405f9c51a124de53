// attribex command line: a thin layer over the C interface.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "attribex/attribex.h"

namespace {

// Exit codes: 0 ok, 1 validation / usage / io, 2 numerics.
int exit_code(ax_status st) { return st == AX_ERR_NUMERICS ? 2 : (st == AX_OK ? 0 : 1); }

struct Failure {
  ax_status status;
};

void check(ax_status st) {
  if (st != AX_OK) {
    std::cerr << "error: " << ax_last_error() << "\n";
    throw Failure{st};
  }
}

void usage_error(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  throw Failure{AX_ERR_VALIDATION};
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};
using Model = Handle<ax_model, ax_model_free>;
using Dataset = Handle<ax_dataset, ax_dataset_free>;
using Expl = Handle<ax_explanation, ax_explanation_free>;
using Batch = Handle<ax_batch, ax_batch_free>;

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { ax_string_free(s); }
};

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << "\n";
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) usage_error("cannot write " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) usage_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Options shared by explain, flip and bench.
struct ExplainFlags {
  std::string method = "lrp";
  std::string rules = "composite";
  std::optional<long long> target;
  std::optional<std::uint64_t> seed;
  std::size_t steps = 0, samples = 0, patch = 0, stride = 0;
  std::optional<double> sigma;
  double fill = 0.0;

  void add(CLI::App* app, bool with_method = true) {
    if (with_method)
      app->add_option("--method", method, "occlusion, gradient, gxi, smoothgrad, ig, smooth-ig, lrp, bilrp");
    app->add_option("--rules", rules, "lrp0, eps=V, gamma=V, composite, zb:L,H");
    app->add_option("--target", target, "output index (default: argmax)");
    app->add_option("--seed", seed, "seed for stochastic methods");
    app->add_option("--steps", steps, "integration steps");
    app->add_option("--samples", samples, "noise samples / random roots");
    app->add_option("--sigma", sigma, "noise scale");
    app->add_option("--patch", patch, "occlusion patch size");
    app->add_option("--stride", stride, "occlusion stride");
    app->add_option("--fill", fill, "occlusion replacement value");
  }

  ax_explain_options options() const {
    ax_explain_options o;
    ax_explain_options_init(&o);
    o.method = method.c_str();
    o.rules = rules.c_str();
    o.target = target ? *target : -1;
    o.has_seed = seed.has_value();
    o.seed = seed.value_or(0);
    o.steps = steps;
    o.samples = samples;
    o.has_sigma = sigma.has_value();
    o.sigma = sigma.value_or(0.0);
    o.patch = patch;
    o.stride = stride;
    o.fill = fill;
    return o;
  }
};

void load_model_and_data(const std::string& model_path, const std::string& input_path, Model& model, Dataset& data) {
  check(ax_model_load(model_path.c_str(), model.out()));
  check(ax_dataset_load(input_path.c_str(), data.out()));
  if (ax_dataset_size(data.get()) == 0) usage_error(input_path + " holds no samples");
}

std::pair<const double*, std::size_t> sample(const Dataset& data, std::size_t index) {
  const double* x = nullptr;
  std::size_t n = 0;
  check(ax_dataset_sample(data.get(), index, &x, &n));
  return {x, n};
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& s) {
  try {
    const auto dots = s.find("..");
    std::size_t used = 0;
    if (dots == std::string::npos) {
      const auto v = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return {v, v};
    }
    const auto a = std::stoull(s.substr(0, dots), &used);
    if (used != dots) throw std::invalid_argument(s);
    const std::string rest = s.substr(dots + 2);
    const auto b = std::stoull(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(s);
    return {a, b};
  } catch (const std::exception&) {
    usage_error("--seed expects N or A..B, got '" + s + "'");
  }
  return {0, 0};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attribex: attribution, evaluation and analysis of neural network predictions"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  std::string out_path;

  // predict
  auto* predict = app.add_subcommand("predict", "Run the model on every sample");
  std::string model_path, input_path;
  predict->add_option("--model", model_path, "model JSON")->required();
  predict->add_option("--input", input_path, "data JSON")->required();
  predict->add_option("--out", out_path, "output file (default stdout)");

  // explain
  auto* explain = app.add_subcommand("explain", "Explain one sample or a whole data file");
  ExplainFlags ef;
  std::size_t index = 0, pair_index = 1;
  bool batch = false;
  explain->add_option("--model", model_path, "model JSON")->required();
  explain->add_option("--input", input_path, "data JSON")->required();
  ef.add(explain);
  explain->add_option("--index", index, "sample to explain");
  explain->add_option("--pair", pair_index, "second sample for bilrp");
  explain->add_flag("--batch", batch, "explain every sample, write a JSON array");
  explain->add_option("--threads", threads, "workers for --batch (default: cores)");
  explain->add_option("--out", out_path, "explanation JSON")->required();

  // flip
  auto* flip = app.add_subcommand("flip", "Pixel-flipping curves per sample (CSV)");
  ExplainFlags ff;
  ff.method = "random";
  std::string impute = "zero";
  std::size_t step_size = 1, iterations = 10;
  flip->add_option("--model", model_path, "model JSON")->required();
  flip->add_option("--input", input_path, "data JSON")->required();
  ff.add(flip);
  flip->add_option("--impute", impute, "zero, mean, neighbor");
  flip->add_option("--iterations", iterations, "neighbor-mean sweeps");
  flip->add_option("--step-size", step_size, "features removed per step");
  flip->add_option("--threads", threads, "workers (default: cores)");
  flip->add_option("--out", out_path, "CSV output (default stdout)");

  // spray
  auto* spray = app.add_subcommand("spray", "Cluster and embed a set of explanations");
  std::string in_path;
  std::size_t k = 2;
  std::optional<double> blur;
  std::optional<std::uint64_t> seed;
  spray->add_option("--in", in_path, "explanations JSON (array)")->required();
  spray->add_option("--k", k, "number of clusters");
  spray->add_option("--blur", blur, "Gaussian blur sigma in pixels (default 1 on grids)");
  spray->add_option("--seed", seed, "k-means seed")->required();
  spray->add_option("--out", out_path, "JSON output (default stdout)");

  // pool
  auto* poolc = app.add_subcommand("pool", "Pool relevance over feature and sample groups");
  std::string groups_path;
  poolc->add_option("--in", in_path, "explanations JSON (array)")->required();
  poolc->add_option("--groups", groups_path, "group spec JSON {\"features\": [[...]], \"samples\": [[...]]}");
  poolc->add_option("--out", out_path, "JSON output (default stdout)");

  // verify
  auto* verify = app.add_subcommand("verify", "Check the method equivalences on seeded instances");
  std::string seed_range;
  verify->add_option("--seed", seed_range, "seed N or range A..B")->required();
  verify->add_option("--out", out_path, "JSON report (default stdout)");

  // bench
  auto* bench = app.add_subcommand("bench", "Explanations per second per method");
  ExplainFlags bf;
  std::string methods = "lrp,smooth-ig,occlusion";
  std::size_t repetitions = 3;
  bench->add_option("--model", model_path, "model JSON")->required();
  bench->add_option("--input", input_path, "data JSON")->required();
  bf.add(bench, false);
  bench->add_option("--methods", methods, "comma-separated methods");
  bench->add_option("--repetitions", repetitions, "timed runs per method (>= 3)");
  bench->add_option("--out", out_path, "JSON output (default stdout)");

  // render
  auto* render = app.add_subcommand("render", "Render an explanation as a PPM heatmap");
  std::size_t upscale = 1;
  render->add_option("--in", in_path, "explanation JSON")->required();
  render->add_option("--upscale", upscale, "pixel replication factor");
  render->add_option("--out", out_path, "PPM file")->required();

  // gen-fixtures
  auto* gen = app.add_subcommand("gen-fixtures", "Write the seeded fixture set");
  gen->add_option("--seed", seed, "fixture seed")->required();
  gen->add_option("--out", out_path, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << "\n";
    app.exit(e);
    return 1;
  }

  try {
    if (const char* lvl = std::getenv("ATTRIBEX_LOG")) check(ax_set_log_level(lvl));

    if (*predict) {
      Model model;
      Dataset data;
      load_model_and_data(model_path, input_path, model, data);
      std::vector<double> y(ax_model_output_size(model.get()));
      std::string text = "[\n";
      for (std::size_t i = 0; i < ax_dataset_size(data.get()); ++i) {
        auto [x, n] = sample(data, i);
        check(ax_forward(model.get(), x, n, y.data(), y.size()));
        std::size_t best = 0;
        text += "  {\"index\": " + std::to_string(i) + ", \"outputs\": [";
        for (std::size_t j = 0; j < y.size(); ++j) {
          if (y[j] > y[best]) best = j;
          text += (j ? ", " : "") + fmt(y[j]);
        }
        text += "], \"argmax\": " + std::to_string(best) + "}";
        text += i + 1 < ax_dataset_size(data.get()) ? ",\n" : "\n";
      }
      write_output(out_path, text + "]\n");
    } else if (*explain) {
      Model model;
      Dataset data;
      load_model_and_data(model_path, input_path, model, data);
      const ax_explain_options opts = ef.options();
      if (ef.method == "bilrp") {
        auto [x, n] = sample(data, index);
        auto [xp, np] = sample(data, pair_index);
        Expl e;
        check(ax_bilrp(model.get(), x, n, xp, np, ef.rules == "composite" ? "lrp0" : ef.rules.c_str(), e.out()));
        check(ax_explanation_save(e.get(), out_path.c_str()));
      } else if (batch) {
        Batch b;
        check(ax_explain_batch(model.get(), data.get(), &opts, threads, b.out()));
        check(ax_batch_save(b.get(), out_path.c_str()));
      } else {
        auto [x, n] = sample(data, index);
        Expl e;
        check(ax_explain(model.get(), x, n, &opts, e.out()));
        check(ax_explanation_save(e.get(), out_path.c_str()));
      }
    } else if (*flip) {
      Model model;
      Dataset data;
      load_model_and_data(model_path, input_path, model, data);
      const bool random = ff.method == "random";
      if (random && !ff.seed) usage_error("flip with the random baseline requires --seed");
      ax_flip_options fo;
      ax_flip_options_init(&fo);
      fo.impute = impute.c_str();
      fo.iterations = iterations;
      fo.step_size = step_size;
      fo.target = ff.target ? *ff.target : -1;
      const ax_explain_options eo = ff.options();
      OwnedString csv;
      check(ax_flip_dataset(model.get(), data.get(), random ? nullptr : &eo, ff.seed.value_or(0), &fo, threads,
                            &csv.s));
      write_output(out_path, csv.s);
    } else if (*spray) {
      Batch b;
      check(ax_batch_load(in_path.c_str(), b.out()));
      OwnedString json;
      check(ax_spray(b.get(), blur.value_or(-1.0), k, *seed, &json.s));
      write_output(out_path, json.s);
    } else if (*poolc) {
      Batch b;
      check(ax_batch_load(in_path.c_str(), b.out()));
      const std::string groups = groups_path.empty() ? std::string() : read_text(groups_path);
      OwnedString json;
      check(ax_pool(b.get(), groups_path.empty() ? nullptr : groups.c_str(), &json.s));
      write_output(out_path, json.s);
    } else if (*verify) {
      const auto [first, last] = parse_seed_range(seed_range);
      OwnedString json;
      int all = 0;
      check(ax_verify(first, last, &json.s, &all));
      write_output(out_path, json.s);
      if (!all) {
        std::cerr << "error: at least one check failed\n";
        return 2;
      }
    } else if (*bench) {
      Model model;
      Dataset data;
      load_model_and_data(model_path, input_path, model, data);
      const ax_explain_options base = bf.options();
      OwnedString json;
      check(ax_bench(model.get(), data.get(), methods.c_str(), repetitions, &base, &json.s));
      write_output(out_path, json.s);
    } else if (*render) {
      Expl e;
      check(ax_explanation_load(in_path.c_str(), e.out()));
      check(ax_render_ppm(e.get(), upscale, out_path.c_str()));
    } else if (*gen) {
      check(ax_gen_fixtures(*seed, out_path.c_str()));
    }
  } catch (const Failure& f) {
    return exit_code(f.status);
  }
  return 0;
}
