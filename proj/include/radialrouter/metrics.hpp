#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "radialrouter/data.hpp"

namespace radialrouter::eval {

using nlohmann::json;

/// Mean performance, mean cost, and score = performance - alpha * cost.
struct Metrics {
  double performance = 0.0;
  double cost = 0.0;
  double score = 0.0;

  json to_json() const { return {{"performance", performance}, {"cost", cost}, {"score", score}}; }
  static Metrics from_json(const json& j) {
    return {j.at("performance").get<double>(), j.at("cost").get<double>(), j.at("score").get<double>()};
  }
  bool operator==(const Metrics&) const = default;
};

struct MetricBreakdown {
  Metrics macro;  // mean over dataset tags of per-tag means
  Metrics micro;  // mean over queries
  std::map<std::string, Metrics> per_dataset;
};

/// Aggregates the per-query choice of LLM. `choices[k]` is the catalog
/// index picked for `queries[indices[k]]`.
inline MetricBreakdown aggregate(const data::LLMCatalog& catalog, std::span<const data::QueryRecord> queries,
                                 std::span<const std::size_t> indices, std::span<const std::size_t> choices,
                                 double alpha) {
  if (indices.size() != choices.size()) throw DimensionError("aggregate: one choice per query required");
  if (indices.empty()) throw ValidationError("aggregate: no queries to evaluate");
  struct Acc {
    double perf = 0.0, cost = 0.0;
    std::size_t count = 0;
  };
  std::map<std::string, Acc> tags;
  Acc all;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto& q = queries[indices[k]];
    if (choices[k] >= catalog.size()) {
      throw ContractError("router chose index " + std::to_string(choices[k]) + " for query " + q.id +
                          " but the pool has " + std::to_string(catalog.size()) + " LLMs");
    }
    const double p = q.perf.at(choices[k]);
    const double c = catalog[choices[k]].cost;
    auto& a = tags[q.dataset_tag];
    a.perf += p;
    a.cost += c;
    ++a.count;
    all.perf += p;
    all.cost += c;
    ++all.count;
  }
  MetricBreakdown out;
  auto finish = [alpha](const Acc& a) {
    Metrics m;
    m.performance = a.perf / static_cast<double>(a.count);
    m.cost = a.cost / static_cast<double>(a.count);
    m.score = m.performance - alpha * m.cost;
    return m;
  };
  for (const auto& [tag, a] : tags) {
    out.per_dataset[tag] = finish(a);
    out.macro.performance += out.per_dataset[tag].performance;
    out.macro.cost += out.per_dataset[tag].cost;
  }
  out.macro.performance /= static_cast<double>(tags.size());
  out.macro.cost /= static_cast<double>(tags.size());
  out.macro.score = out.macro.performance - alpha * out.macro.cost;
  out.micro = finish(all);
  return out;
}

}  // namespace radialrouter::eval
