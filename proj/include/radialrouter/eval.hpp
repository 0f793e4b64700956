#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "radialrouter/clustering.hpp"
#include "radialrouter/data.hpp"
#include "radialrouter/metrics.hpp"
#include "radialrouter/router.hpp"
#include "radialrouter/training.hpp"
#include "radialrouter/util.hpp"

namespace radialrouter::eval {

using nlohmann::json;

struct Scenario {
  std::string name = "custom";
  double alpha = 0.0;

  static Scenario performance_first() { return {"performance_first", 0.0}; }
  static Scenario balance() { return {"balance", 0.02}; }
  static Scenario cost_first() { return {"cost_first", 0.1}; }
  static Scenario custom(double alpha) {
    if (!(alpha >= 0.0)) throw ConfigError("scenario: alpha must be non-negative");
    return {"custom", alpha};
  }

  json to_json() const { return {{"name", name}, {"alpha", alpha}}; }
  static Scenario from_json(const json& j) { return {j.at("name").get<std::string>(), j.at("alpha").get<double>()}; }
  bool operator==(const Scenario&) const = default;
};

inline std::vector<Scenario> named_scenarios() {
  return {Scenario::performance_first(), Scenario::balance(), Scenario::cost_first()};
}

inline Scenario scenario_from_string(const std::string& name) {
  for (const auto& s : named_scenarios()) {
    if (s.name == name) return s;
  }
  throw ConfigError("unknown scenario '" + name + "' (expected performance_first, balance or cost_first)");
}

struct EvalReport {
  std::string router;
  Scenario scenario;
  Metrics macro;
  Metrics micro;
  std::map<std::string, Metrics> per_dataset;
  std::optional<Metrics> expected;  // closed-form expectation (random baseline)
  double oracle_score = 0.0;        // macro oracle score on the same queries
  std::vector<std::size_t> choice_counts;
  std::size_t queries = 0;
  std::string catalog_hash;
  std::uint64_t seed = 0;
  std::string checkpoint_id;
  std::string note;

  json to_json() const {
    json per = json::object();
    for (const auto& [tag, m] : per_dataset) per[tag] = m.to_json();
    json j = {{"router", router},
              {"scenario", scenario.to_json()},
              {"macro", macro.to_json()},
              {"micro", micro.to_json()},
              {"per_dataset", per},
              {"oracle_score", oracle_score},
              {"choice_counts", choice_counts},
              {"queries", queries},
              {"catalog_hash", catalog_hash},
              {"seed", seed},
              {"checkpoint_id", checkpoint_id},
              {"note", note}};
    if (expected) j["expected"] = expected->to_json();
    return j;
  }

  static EvalReport from_json(const json& j) {
    EvalReport r;
    r.router = j.at("router").get<std::string>();
    r.scenario = Scenario::from_json(j.at("scenario"));
    r.macro = Metrics::from_json(j.at("macro"));
    r.micro = Metrics::from_json(j.at("micro"));
    for (const auto& [tag, m] : j.at("per_dataset").items()) r.per_dataset[tag] = Metrics::from_json(m);
    if (j.contains("expected")) r.expected = Metrics::from_json(j.at("expected"));
    r.oracle_score = j.at("oracle_score").get<double>();
    r.choice_counts = j.at("choice_counts").get<std::vector<std::size_t>>();
    r.queries = j.at("queries").get<std::size_t>();
    r.catalog_hash = j.at("catalog_hash").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.checkpoint_id = j.at("checkpoint_id").get<std::string>();
    r.note = j.value("note", "");
    return r;
  }

  bool operator==(const EvalReport&) const = default;
};

/// Maps a query (and its embedding) to a catalog index.
using Decision = std::function<std::size_t(const data::QueryRecord&, std::span<const double>)>;

inline std::vector<std::size_t> all_queries(const data::Corpus& corpus) {
  std::vector<std::size_t> idx(corpus.queries.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

/// Per-query true-score argmax; ties go to the cheaper LLM, then the lower index.
inline std::size_t oracle_choice(const data::QueryRecord& q, const data::LLMCatalog& catalog, double alpha) {
  std::size_t best = 0;
  double best_score = router::true_score(q.perf.at(0), catalog[0].cost, alpha);
  for (std::size_t i = 1; i < catalog.size(); ++i) {
    const double s = router::true_score(q.perf.at(i), catalog[i].cost, alpha);
    if (s > best_score || (s == best_score && catalog[i].cost < catalog[best].cost)) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

inline std::vector<std::size_t> oracle_choices(const data::Corpus& corpus, std::span<const std::size_t> indices,
                                               double alpha) {
  std::vector<std::size_t> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(oracle_choice(corpus.queries[i], corpus.catalog, alpha));
  return out;
}

/// Builds the report for fixed per-query choices and checks it against the oracle.
inline EvalReport report_from_choices(const std::string& name, const data::Corpus& corpus,
                                      std::span<const std::size_t> indices, std::span<const std::size_t> choices,
                                      const Scenario& scenario) {
  const auto m = aggregate(corpus.catalog, corpus.queries, indices, choices, scenario.alpha);
  const auto oracle = oracle_choices(corpus, indices, scenario.alpha);
  const double oracle_score = aggregate(corpus.catalog, corpus.queries, indices, oracle, scenario.alpha).macro.score;
  if (m.macro.score > oracle_score + 1e-12) {
    throw ContractError("oracle dominance violated: " + name + " scores " + std::to_string(m.macro.score) +
                        " above the oracle's " + std::to_string(oracle_score));
  }
  EvalReport r;
  r.router = name;
  r.scenario = scenario;
  r.macro = m.macro;
  r.micro = m.micro;
  r.per_dataset = m.per_dataset;
  r.oracle_score = oracle_score;
  r.choice_counts.assign(corpus.catalog.size(), 0);
  for (auto c : choices) ++r.choice_counts[c];
  r.queries = indices.size();
  r.catalog_hash = corpus.catalog.hash();
  return r;
}

inline EvalReport evaluate_router(const std::string& name, const Decision& decide, const data::Corpus& corpus,
                                  std::span<const std::size_t> indices, const Scenario& scenario) {
  std::vector<std::size_t> choices;
  choices.reserve(indices.size());
  for (auto i : indices) {
    const auto& q = corpus.queries[i];
    const std::span<const double> e =
        q.embedding_row == data::kNoRow ? std::span<const double>{} : corpus.embedding(q);
    choices.push_back(decide(q, e));
  }
  return report_from_choices(name, corpus, indices, choices, scenario);
}

inline Decision model_decision(const router::RouterModel& model) {
  return [model](const data::QueryRecord&, std::span<const double> e) { return model.route_index(e); };
}

inline EvalReport constant_router(const data::Corpus& corpus, std::span<const std::size_t> indices,
                                  const Scenario& scenario, std::size_t llm) {
  std::vector<std::size_t> choices(indices.size(), llm);
  auto r = report_from_choices(corpus.catalog[llm].name, corpus, indices, choices, scenario);
  r.note = corpus.catalog[llm].name;
  return r;
}

/// The single LLM with the highest macro score; ties go to the lower index.
inline EvalReport baseline_best_candidate(const data::Corpus& corpus, std::span<const std::size_t> indices,
                                          const Scenario& scenario) {
  std::optional<EvalReport> best;
  for (std::size_t i = 0; i < corpus.catalog.size(); ++i) {
    auto r = constant_router(corpus, indices, scenario, i);
    if (!best || r.macro.score > best->macro.score) best = std::move(r);
  }
  best->router = "best_candidate";
  return *best;
}

inline EvalReport baseline_oracle(const data::Corpus& corpus, std::span<const std::size_t> indices,
                                  const Scenario& scenario) {
  return report_from_choices("oracle", corpus, indices, oracle_choices(corpus, indices, scenario.alpha), scenario);
}

/// Mean of `trials` uniform random routings, plus the closed-form
/// expectation (mean over LLMs of each LLM's constant-router metrics).
inline EvalReport baseline_random(const data::Corpus& corpus, std::span<const std::size_t> indices,
                                  const Scenario& scenario, std::size_t trials = 50, std::uint64_t seed = 0) {
  if (trials < 1) throw ConfigError("random baseline: need at least one trial");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, corpus.catalog.size() - 1);
  EvalReport mean;
  std::map<std::string, Metrics> per;
  std::vector<std::size_t> counts(corpus.catalog.size(), 0);
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<std::size_t> choices;
    for (std::size_t k = 0; k < indices.size(); ++k) choices.push_back(pick(rng));
    auto r = report_from_choices("random", corpus, indices, choices, scenario);
    if (t == 0) mean = r;
    else {
      mean.macro.performance += r.macro.performance;
      mean.macro.cost += r.macro.cost;
      mean.micro.performance += r.micro.performance;
      mean.micro.cost += r.micro.cost;
      for (const auto& [tag, m] : r.per_dataset) {
        mean.per_dataset[tag].performance += m.performance;
        mean.per_dataset[tag].cost += m.cost;
      }
      for (std::size_t i = 0; i < counts.size(); ++i) mean.choice_counts[i] += r.choice_counts[i];
    }
  }
  const double n = static_cast<double>(trials);
  auto finish = [&](Metrics& m) {
    m.performance /= n;
    m.cost /= n;
    m.score = m.performance - scenario.alpha * m.cost;
  };
  finish(mean.macro);
  finish(mean.micro);
  for (auto& [tag, m] : mean.per_dataset) finish(m);

  Metrics expected;
  for (std::size_t i = 0; i < corpus.catalog.size(); ++i) {
    const auto c = constant_router(corpus, indices, scenario, i);
    expected.performance += c.macro.performance;
    expected.cost += c.macro.cost;
  }
  expected.performance /= static_cast<double>(corpus.catalog.size());
  expected.cost /= static_cast<double>(corpus.catalog.size());
  expected.score = expected.performance - scenario.alpha * expected.cost;
  mean.expected = expected;
  mean.seed = seed;
  mean.note = std::to_string(trials) + " trials";
  return mean;
}

// ---------------------------------------------------------------------------
// Cosine classifier baseline

struct CosineConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  double learning_rate = 1e-2;
  double weight_decay = 0.0;
  double scale = 10.0;  // logit temperature on cosine similarities
  std::uint64_t seed = 0;
};

/// One prototype per LLM; a query goes to the prototype of highest cosine.
class CosineClassifier {
 public:
  CosineClassifier() = default;
  explicit CosineClassifier(std::vector<num::Tensor> prototypes) : prototypes_(std::move(prototypes)) {}

  const std::vector<num::Tensor>& prototypes() const noexcept { return prototypes_; }

  std::size_t route(std::span<const double> embedding) const {
    std::vector<double> sims;
    sims.reserve(prototypes_.size());
    for (const auto& p : prototypes_) sims.push_back(num::cosine(embedding, p.values()));
    return loss::argmax_lowest(sims);
  }

  /// Trains on argmax-true-score labels with scaled-cosine cross-entropy.
  static CosineClassifier fit(const data::Corpus& corpus, std::span<const std::size_t> train_indices, double alpha,
                              const CosineConfig& cfg) {
    if (train_indices.empty()) throw ValidationError("cosine classifier: empty training set");
    const std::size_t n = corpus.catalog.size(), d = corpus.embeddings.dim();
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<num::Tensor> protos;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> v(d);
      for (auto& x : v) x = normal(rng);
      protos.push_back(num::Tensor::row(std::move(v), true));
    }
    const auto scores = train::precompute_scores(corpus.queries, corpus.catalog, alpha);
    std::vector<std::size_t> label(corpus.queries.size(), 0);
    std::vector<bool> present(n, false);
    for (auto i : train_indices) {
      label[i] = loss::ce_label(scores[i]);
      present[label[i]] = true;
    }
    std::vector<num::NamedTensor> params;
    for (std::size_t i = 0; i < n; ++i) {
      if (present[i]) {
        params.push_back({"prototype." + std::to_string(i), protos[i]});
      } else {
        spdlog::warn("cosine classifier: no training query is labelled {}, its prototype stays at init",
                     corpus.catalog[i].name);
      }
    }
    train::AdamWConfig opt;
    opt.learning_rate = cfg.learning_rate;
    opt.weight_decay = cfg.weight_decay;
    train::OptimizerState state;
    std::vector<std::size_t> order(train_indices.begin(), train_indices.end());
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t end = std::min(order.size(), start + cfg.batch_size);
        num::Tape tape;
        std::vector<num::Tensor> terms;
        for (std::size_t k = start; k < end; ++k) {
          const auto e_row = corpus.embedding(corpus.queries[order[k]]);
          const num::Tensor x = num::Tensor::row(std::vector<double>(e_row.begin(), e_row.end()));
          std::vector<num::Tensor> sims;
          for (const auto& p : protos) sims.push_back(num::cosine_similarity(tape, x, p));
          const auto logits = num::scale(tape, num::concat_cols(tape, sims), cfg.scale);
          terms.push_back(num::cross_entropy_with_logits(tape, logits, label[order[k]]));
        }
        tape.backward(num::add_scalars(tape, terms));
        train::adamw_step(params, state, opt);
        for (const auto& p : protos) p.zero_grad();
      }
    }
    return CosineClassifier(std::move(protos));
  }

 private:
  std::vector<num::Tensor> prototypes_;
};

inline EvalReport baseline_cosine_classifier(const data::Corpus& corpus, std::span<const std::size_t> train_indices,
                                             std::span<const std::size_t> test_indices, const Scenario& scenario,
                                             const CosineConfig& cfg = {}) {
  const auto clf = CosineClassifier::fit(corpus, train_indices, scenario.alpha, cfg);
  auto r = evaluate_router(
      "cosine_classifier", [&clf](const data::QueryRecord&, std::span<const double> e) { return clf.route(e); },
      corpus, test_indices, scenario);
  r.seed = cfg.seed;
  return r;
}

/// Fraction of queries whose choice equals the label.
inline double routing_accuracy(std::span<const std::size_t> choices, std::span<const std::size_t> labels) {
  if (choices.size() != labels.size() || choices.empty()) throw DimensionError("routing_accuracy: bad lengths");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < choices.size(); ++i) hits += choices[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(choices.size());
}

// ---------------------------------------------------------------------------
// Experiments

struct SweepRow {
  std::string router;
  double alpha = 0.0;
  Metrics macro;
};

/// Builds (trains or loads) a decision function for one alpha.
using RouterFactory = std::function<Decision(double alpha)>;

/// One row per (alpha, router). Baselines random / best_candidate / oracle
/// come first, then the supplied routers in order.
inline std::vector<SweepRow> alpha_sweep(const data::Corpus& corpus, std::span<const std::size_t> indices,
                                         std::span<const double> alphas,
                                         const std::vector<std::pair<std::string, RouterFactory>>& routers,
                                         bool baselines = true, std::uint64_t seed = 0) {
  std::vector<SweepRow> rows;
  for (double a : alphas) {
    const auto sc = Scenario::custom(a);
    if (baselines) {
      rows.push_back({"random", a, baseline_random(corpus, indices, sc, 50, seed).macro});
      rows.push_back({"best_candidate", a, baseline_best_candidate(corpus, indices, sc).macro});
      rows.push_back({"oracle", a, baseline_oracle(corpus, indices, sc).macro});
    }
    for (const auto& [name, factory] : routers) {
      rows.push_back({name, a, evaluate_router(name, factory(a), corpus, indices, sc).macro});
    }
  }
  return rows;
}

struct PoolRow {
  std::size_t pool_size = 0;
  std::string added;
  std::string router;
  Metrics macro;
};

/// Builds a decision function for a restricted pool.
using PoolFactory = std::function<Decision(const data::Corpus& restricted)>;

/// Nested pools in the given insertion order; oracle and best-candidate rows
/// per size, plus a trained-router row when a factory is supplied.
inline std::vector<PoolRow> pool_growth(const data::Corpus& corpus, std::span<const std::size_t> indices,
                                        std::span<const std::string> order, const Scenario& scenario,
                                        const PoolFactory& factory = {}) {
  std::vector<PoolRow> rows;
  std::vector<std::string> pool;
  for (const auto& name : order) {
    pool.push_back(name);
    const auto sub = data::restrict_pool(corpus, pool);
    rows.push_back({pool.size(), name, "oracle", baseline_oracle(sub, indices, scenario).macro});
    rows.push_back({pool.size(), name, "best_candidate", baseline_best_candidate(sub, indices, scenario).macro});
    if (factory) {
      rows.push_back({pool.size(), name, "radialrouter", evaluate_router("radialrouter", factory(sub), sub, indices,
                                                                         scenario).macro});
    }
  }
  return rows;
}

struct AblationVariant {
  std::string name;
  rf::Backbone backbone = rf::Backbone::radial;
  loss::SelectionLoss selection = loss::SelectionLoss::kl;
  bool qq = true;
  bool timed = true;  // backbone variants report routing time

  bool operator==(const AblationVariant&) const = default;
};

inline std::vector<AblationVariant> ablation_variants() {
  using rf::Backbone;
  using loss::SelectionLoss;
  return {{"radialrouter", Backbone::radial, SelectionLoss::kl, true, true},
          {"star_transformer_topology", Backbone::star, SelectionLoss::kl, true, true},
          {"full_attention_transformer", Backbone::transformer, SelectionLoss::kl, true, true},
          {"mlp_only", Backbone::mlp, SelectionLoss::kl, true, true},
          {"without_qq", Backbone::radial, SelectionLoss::kl, false, false},
          {"with_ce", Backbone::radial, SelectionLoss::ce, true, false},
          {"with_ql", Backbone::radial, SelectionLoss::ql, true, false}};
}

inline AblationVariant ablation_variant(const std::string& name) {
  for (const auto& v : ablation_variants()) {
    if (v.name == name) return v;
  }
  throw ConfigError("unknown ablation variant '" + name + "'");
}

struct AblationResult {
  AblationVariant variant;
  EvalReport report;
  std::optional<double> time_ms;  // mean routing time per batch of 64 queries
  std::uint64_t attention_calls = 0;  // during timed routing
  std::string parameter_hash;
};

inline constexpr std::size_t kTimingBatch = 64;

/// Mean wall-clock milliseconds to route batches of 64 queries (cycling
/// through `indices`), embeddings precomputed.
inline double routing_time_per_batch(const router::RouterModel& model, const data::Corpus& corpus,
                                     std::span<const std::size_t> indices, std::size_t batches = 5) {
  if (indices.empty()) throw ValidationError("timing: no queries");
  using clock = std::chrono::steady_clock;
  double total = 0.0;
  std::size_t k = 0;
  for (std::size_t b = 0; b < batches; ++b) {
    const auto t0 = clock::now();
    for (std::size_t j = 0; j < kTimingBatch; ++j, ++k) {
      (void)model.route_index(corpus.embedding(corpus.queries[indices[k % indices.size()]]));
    }
    total += std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  }
  return total / static_cast<double>(batches);
}

/// Trains the variant on `split.train` (validating on `split.validation`)
/// and evaluates it on `split.test`.
inline AblationResult ablation_run(const data::Corpus& corpus, const train::Split& split,
                                   const cluster::SemanticGroups* groups, router::RouterConfig router_cfg,
                                   train::TrainConfig train_cfg, const Scenario& scenario,
                                   const AblationVariant& variant) {
  router_cfg.backbone = variant.backbone;
  train_cfg.alpha = scenario.alpha;
  train_cfg.loss.selection = variant.selection;
  if (!variant.qq) train_cfg.loss.lambda = 0.0;
  if (variant.selection == loss::SelectionLoss::ql) {
    const std::size_t k = std::min(train_cfg.loss.top_k, corpus.catalog.size() / 2);
    if (k != train_cfg.loss.top_k) {
      spdlog::info("ablation {}: K lowered from {} to {} for a pool of {}", variant.name, train_cfg.loss.top_k, k,
                   corpus.catalog.size());
    }
    train_cfg.loss.top_k = k;
  }
  const auto trained = train::train(corpus, split, groups, router_cfg, train_cfg);
  const auto& model = trained.state.best;
  AblationResult out;
  out.variant = variant;
  out.parameter_hash = model.parameter_hash();
  out.report = evaluate_router(variant.name, model_decision(model), corpus, split.test, scenario);
  out.report.seed = train_cfg.seed;
  if (variant.timed) {
    const auto before = num::counters().attention_calls;
    out.time_ms = routing_time_per_batch(model, corpus, split.test);
    out.attention_calls = num::counters().attention_calls - before;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report emission
//
// table1.csv     router,scenario,alpha,performance,cost,score
// reports.json   array of EvalReport objects
// ablation.csv   variant,performance,cost,score,time_ms ("-" when untimed)
// fig3a.tsv      alpha router score
// fig3b.tsv      router alpha cost performance
// fig5.tsv       pool_size added router performance cost score

inline std::string fmt_num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << std::fixed << v;
  return s.str();
}

inline std::string table1_csv(std::span<const EvalReport> reports) {
  std::string out = "router,scenario,alpha,performance,cost,score\n";
  for (const auto& r : reports) {
    out += r.router + "," + r.scenario.name + "," + fmt_num(r.scenario.alpha) + "," + fmt_num(r.macro.performance) +
           "," + fmt_num(r.macro.cost) + "," + fmt_num(r.macro.score) + "\n";
  }
  return out;
}

inline json reports_to_json(std::span<const EvalReport> reports) {
  json a = json::array();
  for (const auto& r : reports) a.push_back(r.to_json());
  return a;
}

inline std::vector<EvalReport> reports_from_json(const json& j) {
  std::vector<EvalReport> out;
  for (const auto& r : j) out.push_back(EvalReport::from_json(r));
  return out;
}

inline std::string ablation_csv(std::span<const AblationResult> results) {
  std::string out = "variant,performance,cost,score,time_ms\n";
  for (const auto& r : results) {
    out += r.variant.name + "," + fmt_num(r.report.macro.performance) + "," + fmt_num(r.report.macro.cost) + "," +
           fmt_num(r.report.macro.score) + "," + (r.time_ms ? fmt_num(*r.time_ms) : std::string("-")) + "\n";
  }
  return out;
}

inline std::string fig3a_tsv(std::span<const SweepRow> rows) {
  std::string out = "alpha\trouter\tscore\n";
  for (const auto& r : rows) out += fmt_num(r.alpha) + "\t" + r.router + "\t" + fmt_num(r.macro.score) + "\n";
  return out;
}

inline std::string fig3b_tsv(std::span<const SweepRow> rows) {
  std::string out = "router\talpha\tcost\tperformance\n";
  for (const auto& r : rows) {
    out += r.router + "\t" + fmt_num(r.alpha) + "\t" + fmt_num(r.macro.cost) + "\t" + fmt_num(r.macro.performance) +
           "\n";
  }
  return out;
}

inline std::string fig5_tsv(std::span<const PoolRow> rows) {
  std::string out = "pool_size\tadded\trouter\tperformance\tcost\tscore\n";
  for (const auto& r : rows) {
    out += std::to_string(r.pool_size) + "\t" + r.added + "\t" + r.router + "\t" + fmt_num(r.macro.performance) +
           "\t" + fmt_num(r.macro.cost) + "\t" + fmt_num(r.macro.score) + "\n";
  }
  return out;
}

struct ReportBundle {
  std::vector<EvalReport> reports;
  std::vector<SweepRow> sweep;
  std::vector<PoolRow> pool;
  std::vector<AblationResult> ablation;
};

/// Writes every non-empty part of the bundle into `dir`; returns the paths written.
inline std::vector<std::filesystem::path> emit_report(const std::filesystem::path& dir, const ReportBundle& b) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& text) {
    write_file_atomic(dir / name, text);
    written.push_back(dir / name);
  };
  if (!b.reports.empty()) {
    put("table1.csv", table1_csv(b.reports));
    put("reports.json", reports_to_json(b.reports).dump(2) + "\n");
  }
  if (!b.sweep.empty()) {
    put("fig3a.tsv", fig3a_tsv(b.sweep));
    put("fig3b.tsv", fig3b_tsv(b.sweep));
  }
  if (!b.pool.empty()) put("fig5.tsv", fig5_tsv(b.pool));
  if (!b.ablation.empty()) put("ablation.csv", ablation_csv(b.ablation));
  return written;
}

}  // namespace radialrouter::eval
