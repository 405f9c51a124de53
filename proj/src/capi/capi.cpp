#include "attribex/attribex.h"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <cstring>
#include <mutex>
#include <new>
#include <sstream>

#include "attribex/analysis.hpp"
#include "attribex/errors.hpp"
#include "attribex/evaluation.hpp"
#include "attribex/explain.hpp"
#include "attribex/fixtures.hpp"
#include "attribex/io.hpp"
#include "attribex/neuralize.hpp"
#include "attribex/parallel.hpp"
#include "attribex/random.hpp"
#include "attribex/render.hpp"
#include "attribex/theory.hpp"

struct ax_model {
  attribex::Network net;
};
struct ax_dataset {
  std::vector<attribex::Sample> samples;
};
struct ax_explanation {
  attribex::Explanation e;
};
struct ax_batch {
  std::vector<ax_explanation> items;
};
struct ax_kkm {
  attribex::KernelKMeansModel model;
};

namespace {

using namespace attribex;

thread_local std::string last_error;

std::shared_ptr<spdlog::logger> logger() {
  static std::once_flag once;
  static std::shared_ptr<spdlog::logger> log;
  std::call_once(once, [] {
    log = spdlog::stderr_color_mt("attribex");
    log->set_pattern("[%l] %v");
    const char* env = std::getenv("ATTRIBEX_LOG");
    log->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
  });
  return log;
}

ax_status status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::Validation:
      return AX_ERR_VALIDATION;
    case ErrorKind::Numerics:
      return AX_ERR_NUMERICS;
    case ErrorKind::Io:
      return AX_ERR_IO;
  }
  return AX_ERR_INTERNAL;
}

template <class F>
ax_status guard(F&& f) {
  ax_status st = AX_OK;
  try {
    f();
    last_error.clear();
    return AX_OK;
  } catch (const Error& e) {
    last_error = e.what();
    st = status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    st = AX_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    st = AX_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    st = AX_ERR_INTERNAL;
  }
  logger()->debug("status {}: {}", static_cast<int>(st), last_error);
  return st;
}

void need(const void* p, const char* what) {
  if (!p) throw ConfigError(std::string(what) + " is null");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

Tensor input_tensor(const Network& net, const double* x, std::size_t n) {
  need(x, "input");
  if (n != net.input_size())
    throw InputShapeError("expected " + std::to_string(net.input_size()) + " values for " +
                          shape_string(net.input_shape()) + ", got " + std::to_string(n));
  return Tensor(net.input_shape(), std::vector<double>(x, x + n));
}

MethodSpec method_spec(const ax_explain_options* o) {
  MethodSpec s;
  if (!o) return s;
  if (o->method) s.method = o->method;
  if (o->rules) s.rules = o->rules;
  if (o->target >= 0) s.target = static_cast<std::size_t>(o->target);
  if (o->has_seed) s.seed = o->seed;
  s.steps = o->steps;
  s.samples = o->samples;
  if (o->has_sigma) s.sigma = o->sigma;
  s.patch = o->patch;
  s.stride = o->stride;
  s.fill = o->fill;
  return s;
}

ImputationPolicy flip_policy(const ax_flip_options* o, const ax_dataset* mean_source) {
  ImputationPolicy p = ImputationPolicy::parse(o && o->impute ? o->impute : "zero");
  if (o && o->iterations) p.iterations = o->iterations;
  if (mean_source && p.kind != ImputeKind::Zero) {
    std::vector<Tensor> xs;
    for (const auto& s : mean_source->samples) xs.push_back(s.x);
    p.mean = dataset_mean(xs);
  }
  return p;
}

std::size_t flip_step(const ax_flip_options* o) { return o && o->step_size ? o->step_size : 1; }

std::size_t resolve_target(const Network& net, const Tensor& x, int64_t target) {
  return target >= 0 ? static_cast<std::size_t>(target) : argmax_target(net, x);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<Tensor> batch_tensors(const ax_batch* b) {
  need(b, "batch");
  std::vector<Tensor> out;
  for (const auto& it : b->items) out.push_back(it.e.relevance);
  return out;
}

}  // namespace

extern "C" {

const char* ax_version(void) { return "0.1.0"; }

const char* ax_last_error(void) { return last_error.c_str(); }

void ax_string_free(char* s) { std::free(s); }

ax_status ax_set_log_level(const char* level) {
  return guard([&] {
    need(level, "level");
    const auto lvl = spdlog::level::from_str(level);
    if (lvl == spdlog::level::off && std::strcmp(level, "off") != 0)
      throw ConfigError(std::string("unknown log level '") + level + "'");
    logger()->set_level(lvl);
  });
}

ax_status ax_model_load(const char* path, ax_model** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new ax_model{load_model(path)};
    logger()->debug("loaded model {} ({} layers)", path, (*out)->net.layers().size());
  });
}

ax_status ax_model_save(const ax_model* model, const char* path) {
  return guard([&] {
    need(model, "model");
    need(path, "path");
    save_model(model->net, path);
  });
}

void ax_model_free(ax_model* model) { delete model; }

size_t ax_model_input_size(const ax_model* model) { return model ? model->net.input_size() : 0; }

size_t ax_model_output_size(const ax_model* model) { return model ? model->net.output_size() : 0; }

ax_status ax_model_input_shape(const ax_model* model, size_t* dims, size_t cap, size_t* rank) {
  return guard([&] {
    need(model, "model");
    const Shape& s = model->net.input_shape();
    if (rank) *rank = s.size();
    for (std::size_t i = 0; i < s.size() && i < cap; ++i) dims[i] = s[i];
  });
}

ax_status ax_forward(const ax_model* model, const double* x, size_t n, double* out, size_t out_n) {
  return guard([&] {
    need(model, "model");
    need(out, "out");
    const Tensor y = model->net.forward(input_tensor(model->net, x, n)).output();
    if (out_n < y.size()) throw ConfigError("output buffer holds " + std::to_string(out_n) + " of " + std::to_string(y.size()));
    std::copy(y.values().begin(), y.values().end(), out);
  });
}

ax_status ax_gradient(const ax_model* model, const double* x, size_t n, size_t target, double* grad) {
  return guard([&] {
    need(model, "model");
    need(grad, "grad");
    const Tensor g = model->net.gradient(input_tensor(model->net, x, n), target);
    std::copy(g.values().begin(), g.values().end(), grad);
  });
}

ax_status ax_dataset_load(const char* path, ax_dataset** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new ax_dataset{load_dataset(path)};
  });
}

void ax_dataset_free(ax_dataset* ds) { delete ds; }

size_t ax_dataset_size(const ax_dataset* ds) { return ds ? ds->samples.size() : 0; }

ax_status ax_dataset_sample(const ax_dataset* ds, size_t index, const double** data, size_t* n) {
  return guard([&] {
    need(ds, "dataset");
    if (index >= ds->samples.size()) throw ConfigError("sample index " + std::to_string(index) + " out of range");
    if (data) *data = ds->samples[index].x.data().data();
    if (n) *n = ds->samples[index].x.size();
  });
}

ax_status ax_dataset_label(const ax_dataset* ds, size_t index, long* label, int* has_label) {
  return guard([&] {
    need(ds, "dataset");
    if (index >= ds->samples.size()) throw ConfigError("sample index " + std::to_string(index) + " out of range");
    const auto& l = ds->samples[index].label;
    if (has_label) *has_label = l.has_value();
    if (label) *label = l.value_or(0);
  });
}

void ax_explain_options_init(ax_explain_options* opts) {
  if (!opts) return;
  *opts = ax_explain_options{};
  opts->method = "lrp";
  opts->rules = "composite";
  opts->target = -1;
}

ax_status ax_explain(const ax_model* model, const double* x, size_t n, const ax_explain_options* opts,
                     ax_explanation** out) {
  return guard([&] {
    need(model, "model");
    need(out, "out");
    const MethodSpec spec = method_spec(opts);
    logger()->debug("explain method={}", spec.method);
    *out = new ax_explanation{explain(model->net, input_tensor(model->net, x, n), spec)};
  });
}

ax_status ax_explain_batch(const ax_model* model, const ax_dataset* ds, const ax_explain_options* opts, size_t threads,
                           ax_batch** out) {
  return guard([&] {
    need(model, "model");
    need(ds, "dataset");
    need(out, "out");
    std::vector<Tensor> xs;
    for (const auto& s : ds->samples) xs.push_back(s.x.reshaped(model->net.input_shape()));
    const std::size_t workers = threads ? threads : default_thread_count();
    logger()->debug("explain batch of {} on {} threads", xs.size(), workers);
    auto expl = explain_batch(model->net, xs, method_spec(opts), workers);
    auto* b = new ax_batch;
    for (auto& e : expl) b->items.push_back({std::move(e)});
    *out = b;
  });
}

ax_status ax_bilrp(const ax_model* embed, const double* x, size_t n, const double* x_prime, size_t n_prime,
                   const char* rules, ax_explanation** out) {
  return guard([&] {
    need(embed, "model");
    need(out, "out");
    const Network& net = embed->net;
    const Tensor a = input_tensor(net, x, n), b = input_tensor(net, x_prime, n_prime);
    Tensor r = attribex::bilrp(net, a, b, RuleMap::parse(rules ? rules : "lrp0", net));
    *out = new ax_explanation{make_explanation(std::move(r), "bilrp", 0)};
  });
}

void ax_explanation_free(ax_explanation* e) { delete e; }

ax_status ax_explanation_load(const char* path, ax_explanation** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new ax_explanation{explanation_from_json(read_json_file(path))};
  });
}

ax_status ax_explanation_save(const ax_explanation* e, const char* path) {
  return guard([&] {
    need(e, "explanation");
    need(path, "path");
    write_text_file(path, dump_json(explanation_to_json(e->e), true));
  });
}

size_t ax_explanation_size(const ax_explanation* e) { return e ? e->e.relevance.size() : 0; }
const double* ax_explanation_values(const ax_explanation* e) { return e ? e->e.relevance.data().data() : nullptr; }
double ax_explanation_sum(const ax_explanation* e) { return e ? e->e.sum : 0.0; }
size_t ax_explanation_target(const ax_explanation* e) { return e ? e->e.target : 0; }
const char* ax_explanation_method(const ax_explanation* e) { return e ? e->e.method.c_str() : ""; }

ax_status ax_batch_load(const char* path, ax_batch** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    const auto doc = read_json_file(path);
    auto* b = new ax_batch;
    try {
      if (doc.is_array()) {
        for (const auto& item : doc) b->items.push_back({explanation_from_json(item)});
      } else {
        b->items.push_back({explanation_from_json(doc)});
      }
    } catch (...) {
      delete b;
      throw;
    }
    *out = b;
  });
}

ax_status ax_batch_save(const ax_batch* b, const char* path) {
  return guard([&] {
    need(b, "batch");
    need(path, "path");
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& it : b->items) arr.push_back(explanation_to_json(it.e));
    write_text_file(path, dump_json(arr, true));
  });
}

void ax_batch_free(ax_batch* b) { delete b; }
size_t ax_batch_size(const ax_batch* b) { return b ? b->items.size() : 0; }
const ax_explanation* ax_batch_get(const ax_batch* b, size_t index) {
  return b && index < b->items.size() ? &b->items[index] : nullptr;
}

void ax_flip_options_init(ax_flip_options* opts) {
  if (!opts) return;
  *opts = ax_flip_options{};
  opts->impute = "zero";
  opts->iterations = 10;
  opts->step_size = 1;
  opts->target = -1;
}

size_t ax_flip_length(size_t n, size_t step_size) {
  if (step_size == 0) return 0;
  return 1 + (n + step_size - 1) / step_size;
}

ax_status ax_pixel_flip(const ax_model* model, const double* x, size_t n, const double* relevance, uint64_t seed,
                        const ax_flip_options* opts, const ax_dataset* mean_source, double* scores, size_t scores_n,
                        double* auc) {
  return guard([&] {
    need(model, "model");
    const Network& net = model->net;
    const Tensor xt = input_tensor(net, x, n);
    const ImputationPolicy policy = flip_policy(opts, mean_source);
    const std::size_t target = resolve_target(net, xt, opts ? opts->target : -1);
    const FlipCurve c =
        relevance ? pixel_flip(net, xt, Tensor(xt.shape(), std::vector<double>(relevance, relevance + n)), policy,
                               flip_step(opts), target)
                  : random_flip_baseline(net, xt, seed, policy, flip_step(opts), target);
    if (scores) {
      if (scores_n < c.scores.size()) throw ConfigError("score buffer too small");
      std::copy(c.scores.begin(), c.scores.end(), scores);
    }
    if (auc) *auc = c.auc;
  });
}

ax_status ax_flip_dataset(const ax_model* model, const ax_dataset* ds, const ax_explain_options* explain_opts,
                          uint64_t seed, const ax_flip_options* opts, size_t threads, char** csv) {
  return guard([&] {
    need(model, "model");
    need(ds, "dataset");
    need(csv, "csv");
    const Network& net = model->net;
    const ImputationPolicy policy = flip_policy(opts, ds);
    const MethodSpec spec = method_spec(explain_opts);
    std::vector<FlipCurve> curves(ds->samples.size());
    parallel_for(curves.size(), threads ? threads : default_thread_count(), [&](std::size_t i) {
      const Tensor x = ds->samples[i].x.reshaped(net.input_shape());
      const std::size_t target = resolve_target(net, x, opts ? opts->target : -1);
      if (explain_opts) {
        MethodSpec s = spec;
        s.target = target;
        if (spec.seed) s.seed = mix_seed(*spec.seed, i);
        curves[i] = pixel_flip(net, x, explain(net, x, s).relevance, policy, flip_step(opts), target);
      } else {
        curves[i] = random_flip_baseline(net, x, mix_seed(seed, i), policy, flip_step(opts), target);
      }
    });
    std::ostringstream out;
    out << "sample,step,score\n";
    auto emit = [&](const std::string& name, const FlipCurve& c) {
      for (std::size_t k = 0; k < c.scores.size(); ++k) out << name << ',' << c.steps[k] << ',' << format_double(c.scores[k]) << '\n';
      out << name << ",auc," << format_double(c.auc) << '\n';
    };
    for (std::size_t i = 0; i < curves.size(); ++i) emit(std::to_string(i), curves[i]);
    if (!curves.empty()) emit("mean", mean_curve(curves));
    *csv = copy_string(out.str());
  });
}

ax_status ax_filesize_proxy(const double* relevance, size_t n, int bins, size_t* bytes) {
  return guard([&] {
    need(relevance, "relevance");
    need(bytes, "bytes");
    *bytes = filesize_proxy(Tensor::vector(std::vector<double>(relevance, relevance + n)), bins);
  });
}

ax_status ax_bench(const ax_model* model, const ax_dataset* ds, const char* methods, size_t repetitions,
                   const ax_explain_options* base, char** json) {
  return guard([&] {
    need(model, "model");
    need(ds, "dataset");
    need(methods, "methods");
    need(json, "json");
    std::vector<BenchMethod> list;
    std::stringstream ss(methods);
    for (std::string name; std::getline(ss, name, ',');) {
      if (name.empty()) continue;
      MethodSpec s = method_spec(base);
      s.method = name;
      list.push_back({name, s});
    }
    std::vector<Tensor> xs;
    for (const auto& s : ds->samples) xs.push_back(s.x.reshaped(model->net.input_shape()));
    *json = copy_string(dump_json(runtime_bench(model->net, xs, list, repetitions).to_json(), true));
  });
}

ax_status ax_spray(const ax_batch* b, double blur, size_t k, uint64_t seed, char** json) {
  return guard([&] {
    need(json, "json");
    const auto res = spray(batch_tensors(b), blur < 0.0 ? std::nullopt : std::optional<double>(blur), k, seed);
    *json = copy_string(dump_json(res.to_json(), true));
  });
}

ax_status ax_pool(const ax_batch* b, const char* groups_json, char** json) {
  return guard([&] {
    need(b, "batch");
    need(json, "json");
    std::vector<Explanation> expl;
    for (const auto& it : b->items) expl.push_back(it.e);
    const auto r = RelevanceMatrix::from_explanations(expl);
    nlohmann::json doc = nlohmann::json::object();
    if (groups_json) {
      try {
        doc = nlohmann::json::parse(groups_json);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("group spec is not valid JSON: ") + e.what());
      }
    }
    *json = copy_string(dump_json(pool(r, GroupSpec::from_json(doc, r.rows, r.cols)).to_json(), true));
  });
}

ax_status ax_verify(uint64_t first_seed, uint64_t last_seed, char** json, int* all_passed) {
  return guard([&] {
    need(json, "json");
    if (last_seed < first_seed) throw ConfigError("seed range is empty");
    const auto report = verify_propositions(first_seed, last_seed);
    logger()->info("verified seeds {}..{}", first_seed, last_seed);
    *json = copy_string(dump_json(report.to_json(), true));
    if (all_passed) *all_passed = report.all_passed();
  });
}

ax_status ax_kkm_load(const char* path, ax_kkm** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new ax_kkm{load_kkm(path)};
  });
}

void ax_kkm_free(ax_kkm* k) { delete k; }

ax_status ax_kkm_logit(const ax_kkm* k, const double* x, size_t n, size_t cluster, double* logit) {
  return guard([&] {
    need(k, "model");
    need(x, "input");
    need(logit, "logit");
    *logit = kkm_logit_direct(k->model, std::span<const double>(x, n), cluster);
  });
}

ax_status ax_kkm_neuralize(const ax_kkm* k, size_t cluster, ax_model** out) {
  return guard([&] {
    need(k, "model");
    need(out, "out");
    *out = new ax_model{kkm_neuralize(k->model, cluster)};
  });
}

ax_status ax_neuralize_logit(const ax_model* model, size_t cls, double beta, ax_model** out) {
  return guard([&] {
    need(model, "model");
    need(out, "out");
    *out = new ax_model{neuralize_logit(model->net, cls, beta)};
  });
}

ax_status ax_render_ppm(const ax_explanation* e, size_t upscale, const char* path) {
  return guard([&] {
    need(e, "explanation");
    need(path, "path");
    write_text_file(path, render_ppm(e->e.relevance, upscale));
  });
}

ax_status ax_gen_fixtures(uint64_t seed, const char* dir) {
  return guard([&] {
    need(dir, "dir");
    const auto files = write_fixtures(seed, dir);
    logger()->info("wrote {} fixture files to {}", files.size(), dir);
  });
}

}  // extern "C"
