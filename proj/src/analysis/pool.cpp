#include "attribex/analysis.hpp"
#include "attribex/errors.hpp"
#include "attribex/exact_sum.hpp"

namespace attribex {

namespace {

void check_partition(const std::vector<std::vector<std::size_t>>& groups, std::size_t n, const char* what) {
  std::vector<bool> seen(n, false);
  std::size_t covered = 0;
  for (const auto& g : groups) {
    if (g.empty()) throw ConfigError(std::string("empty ") + what + " group");
    for (std::size_t i : g) {
      if (i >= n) throw ConfigError(std::string(what) + " index " + std::to_string(i) + " out of range");
      if (seen[i]) throw ConfigError(std::string(what) + " index " + std::to_string(i) + " appears in two groups");
      seen[i] = true;
      ++covered;
    }
  }
  if (covered != n) throw ConfigError(std::string(what) + " groups do not cover all indices");
}

std::vector<std::vector<std::size_t>> read_groups(const nlohmann::json& doc, const char* key, std::size_t n) {
  if (!doc.contains(key)) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    return {all};
  }
  try {
    return doc.at(key).get<std::vector<std::vector<std::size_t>>>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("group spec field '") + key + "' must be a list of index lists");
  }
}

}  // namespace

RelevanceMatrix RelevanceMatrix::from_explanations(const std::vector<Explanation>& explanations) {
  RelevanceMatrix m;
  m.rows = explanations.size();
  if (m.rows == 0) return m;
  m.cols = explanations.front().relevance.size();
  for (std::size_t n = 0; n < m.rows; ++n) {
    const Tensor& r = explanations[n].relevance;
    if (r.size() != m.cols) throw InputShapeError("explanations differ in size");
    m.values.insert(m.values.end(), r.values().begin(), r.values().end());
    m.sample_ids.push_back(std::to_string(n));
  }
  for (std::size_t i = 0; i < m.cols; ++i) m.feature_names.push_back("f" + std::to_string(i));
  return m;
}

void GroupSpec::validate(std::size_t rows, std::size_t cols) const {
  check_partition(feature_groups, cols, "feature");
  check_partition(sample_groups, rows, "sample");
}

GroupSpec GroupSpec::singletons(std::size_t rows, std::size_t cols) {
  GroupSpec g;
  for (std::size_t i = 0; i < cols; ++i) g.feature_groups.push_back({i});
  for (std::size_t n = 0; n < rows; ++n) g.sample_groups.push_back({n});
  return g;
}

GroupSpec GroupSpec::whole(std::size_t rows, std::size_t cols) {
  return from_json(nlohmann::json::object(), rows, cols);
}

GroupSpec GroupSpec::from_json(const nlohmann::json& doc, std::size_t rows, std::size_t cols) {
  if (!doc.is_object()) throw ConfigError("group spec must be a JSON object");
  GroupSpec g;
  g.feature_groups = read_groups(doc, "features", cols);
  g.sample_groups = read_groups(doc, "samples", rows);
  return g;
}

nlohmann::json PooledRelevance::to_json() const {
  nlohmann::json cells_json = nlohmann::json::array();
  for (std::size_t f = 0; f < feature_groups; ++f) {
    std::vector<double> row(cells.begin() + static_cast<long>(f * sample_groups),
                            cells.begin() + static_cast<long>((f + 1) * sample_groups));
    cells_json.push_back(row);
  }
  return {{"cells", cells_json}, {"total", total}, {"grand_total", grand_total}, {"defect", defect()}};
}

PooledRelevance pool(const RelevanceMatrix& r, const GroupSpec& spec) {
  spec.validate(r.rows, r.cols);
  PooledRelevance out;
  out.feature_groups = spec.feature_groups.size();
  out.sample_groups = spec.sample_groups.size();
  ExactSum total, grand;
  for (const auto& fg : spec.feature_groups) {
    for (const auto& sg : spec.sample_groups) {
      ExactSum cell;
      for (std::size_t n : sg)
        for (std::size_t i : fg) cell.add(r.at(n, i));
      out.cells.push_back(cell.value());
      total.add(cell);
    }
  }
  for (double v : r.values) grand.add(v);
  out.total = total.value();
  out.grand_total = grand.value();
  return out;
}

}  // namespace attribex
