#include <zlib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "attribex/errors.hpp"
#include "attribex/evaluation.hpp"

namespace attribex {

std::size_t filesize_proxy(const Tensor& relevance, int bins) {
  if (bins < 2 || bins > 256) throw ConfigError("bins must be in [2, 256]");
  const double m = relevance.max_abs();
  const double half = (bins - 1) / 2.0;
  std::vector<unsigned char> raster(relevance.size());
  for (std::size_t i = 0; i < raster.size(); ++i) {
    const double v = m > 0.0 ? relevance[i] / m : 0.0;
    const long level = std::lround(half + half * v);
    raster[i] = static_cast<unsigned char>(std::clamp<long>(level, 0, bins - 1));
  }
  uLongf len = compressBound(static_cast<uLong>(raster.size()));
  std::vector<Bytef> out(len);
  if (compress2(out.data(), &len, raster.data(), static_cast<uLong>(raster.size()), 9) != Z_OK)
    throw IoError("deflate failed");
  return len;
}

nlohmann::json BenchReport::to_json() const {
  nlohmann::json j;
  j["environment"] = environment;
  nlohmann::json methods = nlohmann::json::object();
  for (const auto& e : entries)
    methods[e.name] = {{"median_per_second", e.median}, {"runs_per_second", e.throughput}, {"spread", e.spread}};
  j["methods"] = methods;
  return j;
}

BenchReport runtime_bench(const Network& net, const std::vector<Tensor>& samples, const std::vector<BenchMethod>& methods,
                          std::size_t repetitions) {
  if (repetitions < 3) throw ConfigError("benchmark needs at least 3 repetitions");
  if (samples.empty()) throw ConfigError("benchmark needs at least one sample");
  BenchReport report;
  for (const auto& m : methods) {
    BenchEntry e;
    e.name = m.name;
    for (std::size_t r = 0; r < repetitions; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      double sink = 0.0;
      for (const Tensor& x : samples) sink += explain(net, x, m.spec).sum;
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      e.throughput.push_back(static_cast<double>(samples.size()) / std::max(secs, 1e-9));
      if (std::isnan(sink)) throw NumericsError("non-finite relevance during benchmark");
    }
    std::vector<double> sorted = e.throughput;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    e.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    e.spread = (sorted.back() - sorted.front()) / e.median;
    report.entries.push_back(std::move(e));
  }
  report.environment = {
      {"samples", samples.size()},
      {"repetitions", repetitions},
      {"threads", 1},
      {"hardware_threads", std::thread::hardware_concurrency()},
#if defined(__clang__)
      {"compiler", "clang " __clang_version__},
#elif defined(__GNUC__)
      {"compiler", "gcc " __VERSION__},
#else
      {"compiler", "unknown"},
#endif
      {"zlib", zlibVersion()},
  };
  return report;
}

}  // namespace attribex
