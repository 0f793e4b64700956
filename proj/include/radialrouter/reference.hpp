#pragma once

#include <array>
#include <string>
#include <vector>

#include "radialrouter/data.hpp"

/// Published RouterBench statistics for the eleven candidate LLMs: per-dataset
/// accuracy and average cost per query. Used for metric cross-checks that
/// need no training.
namespace radialrouter::reference {

inline const std::array<std::string, 6>& dataset_tags() {
  static const std::array<std::string, 6> tags = {"GSM8K", "Hellaswag", "MBPP",
                                                  "MMLU",  "Winogrande", "ARC"};
  return tags;
}

struct LLMStats {
  std::string name;
  std::array<double, 6> accuracy;  // dataset_tags() order
  double performance;              // published average
  double cost;
};

inline const std::vector<LLMStats>& routerbench_stats() {
  static const std::vector<LLMStats> stats = {
      {"WizardLM-13B-V1.2", {0.5054, 0.6004, 0.3906, 0.5253, 0.5289, 0.6476}, 0.5331, 0.166},
      {"claude-instant-v1", {0.6281, 0.7690, 0.6250, 0.4529, 0.5211, 0.8421}, 0.6397, 0.514},
      {"claude-v1", {0.6520, 0.8187, 0.6094, 0.5281, 0.5711, 0.9199}, 0.6832, 4.486},
      {"claude-v2", {0.6671, 0.3130, 0.6406, 0.5652, 0.4763, 0.6247}, 0.5478, 5.336},
      {"gpt-3.5-turbo-1106", {0.6094, 0.7843, 0.6875, 0.6667, 0.6632, 0.8444}, 0.7092, 0.562},
      {"gpt-4-1106-preview", {0.6589, 0.9057, 0.6875, 0.8162, 0.8552, 0.9565}, 0.8134, 7.185},
      {"code-llama-34b-chat", {0.4548, 0.5194, 0.5156, 0.5284, 0.5921, 0.6636}, 0.5457, 0.407},
      {"llama-2-70b-chat", {0.5252, 0.7046, 0.3750, 0.6034, 0.4974, 0.8169}, 0.5871, 0.490},
      {"mistral-7b-chat", {0.4151, 0.5410, 0.3828, 0.5198, 0.5737, 0.6705}, 0.5171, 0.107},
      {"mixtral-8x7b-chat", {0.5214, 0.6960, 0.5391, 0.6822, 0.6842, 0.8627}, 0.6642, 0.324},
      {"Yi-34B-Chat", {0.5517, 0.8782, 0.4141, 0.7187, 0.7421, 0.9176}, 0.7037, 0.439},
  };
  return stats;
}

/// Order in which LLMs join the pool in the pool-growth experiment.
inline const std::vector<std::string>& pool_growth_order() {
  static const std::vector<std::string> order = {
      "WizardLM-13B-V1.2", "code-llama-34b-chat", "llama-2-70b-chat",  "claude-v2",
      "claude-v1",         "claude-instant-v1",   "mistral-7b-chat",   "mixtral-8x7b-chat",
      "Yi-34B-Chat",       "gpt-3.5-turbo-1106",  "gpt-4-1106-preview"};
  return order;
}

inline data::LLMCatalog routerbench_catalog() {
  std::vector<data::LLMEntry> entries;
  for (const auto& s : routerbench_stats()) entries.push_back({s.name, s.cost});
  return data::LLMCatalog(std::move(entries));
}

/// One pseudo-query per dataset whose per-LLM performance is that dataset's
/// published accuracy. Macro-averaged metrics over these six records equal
/// the per-dataset means of the reference table.
inline std::vector<data::QueryRecord> routerbench_reference_queries() {
  std::vector<data::QueryRecord> out;
  const auto& tags = dataset_tags();
  for (std::size_t k = 0; k < tags.size(); ++k) {
    data::QueryRecord q;
    q.id = "reference-" + tags[k];
    q.dataset_tag = tags[k];
    for (const auto& s : routerbench_stats()) q.perf.push_back(s.accuracy[k]);
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace radialrouter::reference
