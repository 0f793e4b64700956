#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "radialrouter/clustering.hpp"
#include "radialrouter/data.hpp"
#include "radialrouter/losses.hpp"
#include "radialrouter/metrics.hpp"
#include "radialrouter/router.hpp"
#include "radialrouter/util.hpp"

namespace radialrouter::train {

using nlohmann::json;
using num::NamedTensor;
using num::Tape;
using num::Tensor;

/// s_j = perf_j - alpha * cost_j for every query, catalog-aligned.
inline std::vector<std::vector<double>> precompute_scores(std::span<const data::QueryRecord> queries,
                                                          const data::LLMCatalog& catalog, double alpha) {
  std::vector<std::vector<double>> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    if (q.perf.size() != catalog.size()) {
      throw ValidationError("query " + q.id + " has " + std::to_string(q.perf.size()) + " performance cells for " +
                            std::to_string(catalog.size()) + " LLMs");
    }
    std::vector<double> s(catalog.size());
    for (std::size_t i = 0; i < catalog.size(); ++i) {
      if (!std::isfinite(q.perf[i])) {
        throw ValidationError("query " + q.id + " has no performance value for " + catalog[i].name);
      }
      s[i] = router::true_score(q.perf[i], catalog[i].cost, alpha);
    }
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// AdamW

struct AdamWConfig {
  double learning_rate = 5e-5;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t consecutive_aborts = 0;

  json to_json() const { return {{"step", step}, {"m", m}, {"v", v}, {"consecutive_aborts", consecutive_aborts}}; }
  static OptimizerState from_json(const json& j) {
    OptimizerState s;
    s.step = j.at("step").get<std::uint64_t>();
    s.m = j.at("m").get<std::vector<std::vector<double>>>();
    s.v = j.at("v").get<std::vector<std::vector<double>>>();
    s.consecutive_aborts = j.value("consecutive_aborts", std::size_t{0});
    return s;
  }
};

inline constexpr std::size_t kMaxConsecutiveAborts = 3;

/// One decoupled-weight-decay Adam update from the parameters' current
/// gradients. A non-finite gradient skips the step; the third consecutive
/// skip raises. Returns whether the update was applied.
inline bool adamw_step(std::span<const NamedTensor> params, OptimizerState& state, const AdamWConfig& cfg) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.tensor.size(), 0.0);
      state.v.emplace_back(p.tensor.size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw ContractError("adamw: optimizer state does not match parameters");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (state.m[k].size() != params[k].tensor.size()) {
      throw ContractError("adamw: moment shape mismatch for " + params[k].name);
    }
    for (double g : params[k].tensor.grad()) {
      if (!std::isfinite(g)) {
        ++state.consecutive_aborts;
        spdlog::warn("adamw: non-finite gradient in {}, step skipped ({} in a row)", params[k].name,
                     state.consecutive_aborts);
        if (state.consecutive_aborts >= kMaxConsecutiveAborts) {
          throw NumericError("adamw: " + std::to_string(state.consecutive_aborts) +
                             " consecutive steps with non-finite gradients");
        }
        return false;
      }
    }
  }
  state.consecutive_aborts = 0;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  const double decay = 1.0 - cfg.learning_rate * cfg.weight_decay;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor param = params[k].tensor;
    auto w = param.values();
    const auto g = params[k].tensor.grad();
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] *= decay;
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      w[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.epsilon);
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Splits

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// 70/10/20 by query, stratified by dataset tag; indices into `queries`.
inline Split split_dataset(std::span<const data::QueryRecord> queries, std::uint64_t seed, double train_fraction = 0.7,
                           double validation_fraction = 0.1) {
  if (train_fraction <= 0.0 || validation_fraction < 0.0 || train_fraction + validation_fraction > 1.0) {
    throw ConfigError("split: fractions must be positive and sum to at most 1");
  }
  std::map<std::string, std::vector<std::size_t>> by_tag;
  for (std::size_t i = 0; i < queries.size(); ++i) by_tag[queries[i].dataset_tag].push_back(i);
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  Split s;
  for (auto& [tag, idx] : by_tag) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n = static_cast<double>(idx.size());
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * n));
    const auto n_val = std::min(idx.size() - n_train, static_cast<std::size_t>(std::llround(validation_fraction * n)));
    s.train.insert(s.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.validation.insert(s.validation.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                        idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.insert(s.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

// ---------------------------------------------------------------------------
// Configuration

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t max_epochs = 1000;
  double learning_rate = 5e-5;
  double weight_decay = 0.01;
  double alpha = 0.0;
  loss::LossConfig loss;
  std::size_t n_groups = 6;
  std::uint64_t seed = 0;
  std::size_t patience = 50;
  bool freeze_adapter = false;

  AdamWConfig optimizer() const {
    AdamWConfig a;
    a.learning_rate = learning_rate;
    a.weight_decay = weight_decay;
    return a;
  }

  void validate(std::size_t n_llms) const {
    if (batch_size < 1) throw ConfigError("train: batch size must be positive");
    if (loss.lambda > 0.0 && batch_size < 2) throw ConfigError("train: the qq loss needs batch size >= 2");
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning rate must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("train: weight decay must be non-negative");
    if (!(alpha >= 0.0)) throw ConfigError("train: alpha must be non-negative");
    if (max_epochs < 1) throw ConfigError("train: max_epochs must be positive");
    if (patience < 1) throw ConfigError("train: patience must be positive");
    if (loss.lambda > 0.0 && n_groups < 2) throw ConfigError("train: the qq loss needs at least 2 groups");
    loss.validate(n_llms);
  }

  json to_json() const {
    return {{"batch_size", batch_size},
            {"max_epochs", max_epochs},
            {"learning_rate", learning_rate},
            {"weight_decay", weight_decay},
            {"alpha", alpha},
            {"lambda", loss.lambda},
            {"negatives", loss.negatives},
            {"top_k", loss.top_k},
            {"selection_loss", loss::to_string(loss.selection)},
            {"ql_on_logits", loss.ql_on_logits},
            {"n_groups", n_groups},
            {"seed", seed},
            {"patience", patience},
            {"freeze_adapter", freeze_adapter}};
  }

  static TrainConfig from_json(const json& j) {
    TrainConfig c;
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.alpha = j.value("alpha", c.alpha);
    c.loss.lambda = j.value("lambda", c.loss.lambda);
    c.loss.negatives = j.value("negatives", c.loss.negatives);
    c.loss.top_k = j.value("top_k", c.loss.top_k);
    if (j.contains("selection_loss")) {
      c.loss.selection = loss::selection_loss_from_string(j.at("selection_loss").get<std::string>());
    }
    c.loss.ql_on_logits = j.value("ql_on_logits", c.loss.ql_on_logits);
    c.n_groups = j.value("n_groups", c.n_groups);
    c.seed = j.value("seed", c.seed);
    c.patience = j.value("patience", c.patience);
    c.freeze_adapter = j.value("freeze_adapter", c.freeze_adapter);
    return c;
  }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;      // objective per training query
  double selection_loss = 0.0;  // per training query
  double qq_loss = 0.0;         // per sampled anchor
  std::size_t qq_terms = 0;
  std::size_t qq_skipped = 0;
  std::size_t aborted_steps = 0;
  eval::Metrics validation;
  double validation_loss = 0.0;  // selection loss per validation query

  json to_json() const {
    return {{"epoch", epoch},
            {"train_loss", train_loss},
            {"selection_loss", selection_loss},
            {"qq_loss", qq_loss},
            {"qq_terms", qq_terms},
            {"qq_skipped", qq_skipped},
            {"aborted_steps", aborted_steps},
            {"validation", validation.to_json()},
            {"validation_loss", validation_loss}};
  }
};

/// Everything needed to continue a run exactly where it stopped.
struct TrainState {
  router::RouterModel model;  // current weights
  router::RouterModel best;   // best-validation snapshot
  OptimizerState optimizer;
  std::string rng_state;
  std::size_t epoch = 0;  // completed epochs
  double best_score = -std::numeric_limits<double>::infinity();
  double best_loss = std::numeric_limits<double>::infinity();  // validation loss at best_epoch
  std::size_t best_epoch = 0;
  std::size_t since_best = 0;
  bool stopped = false;
};

struct TrainResult {
  TrainState state;
  std::vector<EpochRecord> history;
  std::size_t qq_samples = 0;  // anchors for which a contrastive pair was drawn
};

/// Parameters the optimizer updates, in visit order.
inline std::vector<NamedTensor> trainable_parameters(const router::RouterModel& model, bool freeze_adapter) {
  std::vector<NamedTensor> out;
  for (auto& p : model.parameters()) {
    if (freeze_adapter && p.name.rfind("adapter.", 0) == 0) continue;
    out.push_back(std::move(p));
  }
  return out;
}

/// Macro metrics of the model's argmax routing over the given queries.
inline eval::MetricBreakdown evaluate_model(const router::RouterModel& model, const data::Corpus& corpus,
                                            std::span<const std::size_t> indices, double alpha) {
  std::vector<std::size_t> choices;
  choices.reserve(indices.size());
  for (auto i : indices) {
    Tape tape(false);
    const auto f = model.forward(tape, corpus.embedding(corpus.queries[i]));
    choices.push_back(loss::argmax_lowest(f.probabilities.values()));
  }
  return eval::aggregate(corpus.catalog, corpus.queries, indices, choices, alpha);
}

/// Selection loss of one query from an untracked forward pass.
inline double selection_loss_value(const router::RouterModel::Forward& f, std::span<const double> scores,
                                   std::span<const double> target, const loss::LossConfig& cfg) {
  switch (cfg.selection) {
    case loss::SelectionLoss::kl: return loss::kl_loss(f.probabilities.values(), target);
    case loss::SelectionLoss::ce: return loss::ce_loss(f.probabilities.values(), loss::ce_label(scores));
    case loss::SelectionLoss::ql:
      return loss::ql_contrastive_loss(cfg.ql_on_logits ? f.scores.values() : f.probabilities.values(), scores,
                                       cfg.top_k);
  }
  return 0.0;
}

/// Contrastive pair per batch position; nullopt where the anchor has no
/// in-group partner or no out-group query.
inline std::vector<std::optional<cluster::ContrastivePair>> sample_batch_pairs(std::span<const std::size_t> groups,
                                                                              std::size_t negatives,
                                                                              std::mt19937_64& rng) {
  std::vector<std::size_t> local(groups.size());
  std::iota(local.begin(), local.end(), 0);
  std::vector<std::optional<cluster::ContrastivePair>> out;
  out.reserve(groups.size());
  for (std::size_t k = 0; k < groups.size(); ++k) {
    auto pair = cluster::sample_contrastive_pair(local, groups, k, negatives, rng);
    if (pair && pair->negatives.empty()) pair.reset();
    out.push_back(std::move(pair));
  }
  return out;
}

struct BatchTerms {
  double selection = 0.0;
  double qq = 0.0;
  std::size_t qq_terms = 0;
  std::size_t qq_skipped = 0;
};

/// Sum over the batch of the selection loss plus lambda times the
/// query-query contrastive loss. `pairs` is indexed by batch position and
/// may be empty when lambda is zero.
inline Tensor batch_objective(Tape& tape, const router::RouterModel& model, const data::Corpus& corpus,
                              std::span<const std::size_t> batch, std::span<const std::vector<double>> scores,
                              std::span<const std::vector<double>> targets,
                              std::span<const std::optional<cluster::ContrastivePair>> pairs,
                              const loss::LossConfig& cfg, BatchTerms* stats = nullptr) {
  BatchTerms local;
  BatchTerms& bt = stats ? *stats : local;
  std::vector<Tensor> projected, terms;
  projected.reserve(batch.size());
  for (auto qi : batch) {
    const auto f = model.forward(tape, corpus.embedding(corpus.queries[qi]));
    projected.push_back(f.projected);
    Tensor l;
    switch (cfg.selection) {
      case loss::SelectionLoss::kl: l = loss::kl_loss(tape, f.probabilities, targets[qi]); break;
      case loss::SelectionLoss::ce: l = loss::ce_loss(tape, f.probabilities, loss::ce_label(scores[qi])); break;
      case loss::SelectionLoss::ql:
        l = loss::ql_contrastive_loss(tape, cfg.ql_on_logits ? f.scores : f.probabilities, scores[qi], cfg.top_k);
        break;
    }
    bt.selection += l.item();
    terms.push_back(l);
  }
  if (cfg.lambda > 0.0) {
    if (pairs.size() != batch.size()) throw ContractError("batch_objective: one pair slot per batch query required");
    for (std::size_t k = 0; k < batch.size(); ++k) {
      if (!pairs[k]) {
        ++bt.qq_skipped;
        continue;
      }
      std::vector<Tensor> negatives;
      for (auto j : pairs[k]->negatives) negatives.push_back(projected[j]);
      const Tensor qq = loss::qq_contrastive_loss(tape, projected[k], projected[pairs[k]->positive], negatives);
      bt.qq += qq.item();
      ++bt.qq_terms;
      terms.push_back(num::scale(tape, qq, cfg.lambda));
    }
  }
  return num::add_scalars(tape, terms);
}

/// Training loop: per-query scores, then mini-batch epochs of selection loss plus
/// lambda times the query-query contrastive loss, AdamW, and best-validation
/// selection with patience.
inline TrainResult train(const data::Corpus& corpus, const Split& split, const cluster::SemanticGroups* groups,
                         const router::RouterConfig& router_cfg, const TrainConfig& cfg,
                         std::optional<TrainState> resume = std::nullopt,
                         const std::function<void(const EpochRecord&, const TrainState&)>& on_epoch = {}) {
  cfg.validate(corpus.catalog.size());
  router_cfg.validate();
  if (router_cfg.satellites != corpus.catalog.size()) {
    throw ConfigError("train: router has " + std::to_string(router_cfg.satellites) + " satellites for " +
                      std::to_string(corpus.catalog.size()) + " LLMs");
  }
  if (router_cfg.encoder_dim != corpus.embeddings.dim()) {
    throw ConfigError("train: router expects " + std::to_string(router_cfg.encoder_dim) +
                      "-dim embeddings, corpus has " + std::to_string(corpus.embeddings.dim()));
  }
  if (split.train.empty()) throw ValidationError("train: empty training set");
  if (split.validation.empty()) throw ValidationError("train: empty validation set");

  const auto scores = precompute_scores(corpus.queries, corpus.catalog, cfg.alpha);
  std::vector<std::vector<double>> targets;
  targets.reserve(scores.size());
  for (const auto& s : scores) targets.push_back(router::target_distribution(s));

  const bool use_qq = cfg.loss.lambda > 0.0;
  std::vector<std::size_t> group_of(corpus.queries.size(), std::numeric_limits<std::size_t>::max());
  if (use_qq) {
    if (groups == nullptr) throw ConfigError("train: lambda > 0 requires semantic groups");
    std::vector<bool> seen(groups->n_groups, false);
    for (auto i : split.train) {
      const auto g = groups->group_of(corpus.queries[i].id);
      if (!g) throw ValidationError("train: query " + corpus.queries[i].id + " has no semantic group");
      group_of[i] = *g;
      seen.at(*g) = true;
    }
    if (std::count(seen.begin(), seen.end(), true) < 2) {
      spdlog::warn("train: all training queries fall in one semantic group, the qq term is inert");
    }
  }

  TrainResult result;
  std::mt19937_64 rng(cfg.seed ^ 0x7261646961ULL);
  if (resume) {
    result.state = std::move(*resume);
    if (!result.state.rng_state.empty()) std::istringstream(result.state.rng_state) >> rng;
  } else {
    result.state.model = router::RouterModel::init(router_cfg, cfg.seed);
    result.state.best = result.state.model.clone();
  }
  auto& st = result.state;
  const auto all_params = st.model.parameters();
  const auto params = trainable_parameters(st.model, cfg.freeze_adapter);
  const auto opt = cfg.optimizer();

  std::vector<std::size_t> order;
  while (!st.stopped && st.epoch < cfg.max_epochs) {
    EpochRecord rec;
    rec.epoch = st.epoch + 1;
    order = split.train;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      std::vector<std::size_t> batch_groups;
      if (use_qq) {
        for (auto qi : batch) batch_groups.push_back(group_of[qi]);
      }
      const auto pairs = use_qq ? sample_batch_pairs(batch_groups, cfg.loss.negatives, rng)
                                : std::vector<std::optional<cluster::ContrastivePair>>{};
      Tape tape;
      BatchTerms bt;
      const Tensor total = batch_objective(tape, st.model, corpus, batch, scores, targets, pairs, cfg.loss, &bt);
      rec.selection_loss += bt.selection;
      rec.qq_loss += bt.qq;
      rec.qq_terms += bt.qq_terms;
      rec.qq_skipped += bt.qq_skipped;
      rec.train_loss += total.item();
      tape.backward(total);
      if (!adamw_step(params, st.optimizer, opt)) ++rec.aborted_steps;
      for (const auto& p : all_params) p.tensor.zero_grad();
    }
    result.qq_samples += rec.qq_terms + rec.qq_skipped;
    const double n_train = static_cast<double>(order.size());
    rec.train_loss /= n_train;
    rec.selection_loss /= n_train;
    if (rec.qq_terms > 0) rec.qq_loss /= static_cast<double>(rec.qq_terms);
    if (use_qq && rec.qq_skipped > 0) {
      spdlog::debug("epoch {}: qq term skipped for {} anchors without an in-group partner", rec.epoch, rec.qq_skipped);
    }

    std::vector<std::size_t> choices;
    for (auto i : split.validation) {
      Tape tape(false);
      const auto f = st.model.forward(tape, corpus.embedding(corpus.queries[i]));
      choices.push_back(loss::argmax_lowest(f.probabilities.values()));
      rec.validation_loss += selection_loss_value(f, scores[i], targets[i], cfg.loss);
    }
    rec.validation_loss /= static_cast<double>(split.validation.size());
    rec.validation = eval::aggregate(corpus.catalog, corpus.queries, split.validation, choices, cfg.alpha).macro;
    st.epoch = rec.epoch;
    // Best = highest validation score; equal scores prefer the lower validation loss.
    const bool better = rec.validation.score > st.best_score ||
                        (rec.validation.score == st.best_score && rec.validation_loss < st.best_loss);
    if (better) {
      st.best_score = rec.validation.score;
      st.best_loss = rec.validation_loss;
      st.best_epoch = rec.epoch;
      st.best = st.model.clone();
      st.since_best = 0;
    } else if (++st.since_best >= cfg.patience) {
      st.stopped = true;
      spdlog::info("early stop at epoch {} (best epoch {}, validation score {:.4f})", rec.epoch, st.best_epoch,
                   st.best_score);
    }
    spdlog::debug("epoch {} loss {:.5f} val score {:.4f}", rec.epoch, rec.train_loss, rec.validation.score);
    std::ostringstream rs;
    rs << rng;
    st.rng_state = rs.str();
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec, st);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr std::string_view kCheckpointFormat = "radialrouter-checkpoint";

struct Checkpoint {
  router::RouterConfig router_config;
  TrainConfig train_config;
  data::LLMCatalog catalog;
  TrainState state;  // `state.best` holds the routing weights
  bool with_resume = true;

  const router::RouterModel& model() const { return state.best; }
};

namespace detail {

inline json parameters_to_json(const router::RouterModel& model) {
  json out = json::object();
  for (const auto& p : model.parameters()) {
    const auto v = p.tensor.values();
    out[p.name] = {{"shape", {p.tensor.rows(), p.tensor.cols()}}, {"values", std::vector<double>(v.begin(), v.end())}};
  }
  return out;
}

inline router::RouterModel parameters_from_json(const router::RouterConfig& cfg, const json& j) {
  auto model = router::RouterModel::init(cfg, 0);
  for (auto& p : model.parameters()) {
    if (!j.contains(p.name)) throw FormatError("checkpoint: missing parameter " + p.name);
    const auto& e = j.at(p.name);
    const auto shape = e.at("shape").get<std::vector<std::size_t>>();
    const auto values = e.at("values").get<std::vector<double>>();
    if (shape.size() != 2 || shape[0] != p.tensor.rows() || shape[1] != p.tensor.cols() ||
        values.size() != p.tensor.size()) {
      throw FormatError("checkpoint: parameter " + p.name + " has the wrong shape");
    }
    std::copy(values.begin(), values.end(), p.tensor.values().begin());
  }
  if (j.size() != model.parameters().size()) throw FormatError("checkpoint: unexpected extra parameters");
  return model;
}

}  // namespace detail

inline json checkpoint_to_json(const Checkpoint& c) {
  json j = {{"format", kCheckpointFormat},
            {"version", kVersion},
            {"router_config", c.router_config.to_json()},
            {"train_config", c.train_config.to_json()},
            {"catalog", c.catalog.to_json()},
            {"catalog_hash", c.catalog.hash()},
            {"alpha", c.train_config.alpha},
            {"seed", c.train_config.seed},
            {"selection_loss", loss::to_string(c.train_config.loss.selection)},
            {"epoch", c.state.best_epoch},
            {"validation_score", std::isfinite(c.state.best_score) ? json(c.state.best_score) : json(nullptr)},
            {"parameters", detail::parameters_to_json(c.state.best)},
            {"content_hash", c.state.best.parameter_hash()}};
  if (c.with_resume) {
    j["resume"] = {{"epoch", c.state.epoch},
                   {"best_loss", std::isfinite(c.state.best_loss) ? json(c.state.best_loss) : json(nullptr)},
                   {"since_best", c.state.since_best},
                   {"stopped", c.state.stopped},
                   {"rng_state", c.state.rng_state},
                   {"optimizer", c.state.optimizer.to_json()},
                   {"parameters", detail::parameters_to_json(c.state.model)},
                   {"content_hash", c.state.model.parameter_hash()}};
  }
  return j;
}

/// Parses a checkpoint. With `active`, refuses a checkpoint trained on a
/// different catalog (names, order or costs).
inline Checkpoint checkpoint_from_json(const json& j, const data::LLMCatalog* active = nullptr) {
  Checkpoint c;
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) throw FormatError("checkpoint: unknown format");
    c.router_config = router::RouterConfig::from_json(j.at("router_config"));
    c.train_config = TrainConfig::from_json(j.at("train_config"));
    c.catalog = data::LLMCatalog::from_json(j.at("catalog"));
    if (c.catalog.hash() != j.at("catalog_hash").get<std::string>()) {
      throw FormatError("checkpoint: stored catalog does not match its hash");
    }
    if (active != nullptr && active->hash() != c.catalog.hash()) {
      throw ValidationError("checkpoint was trained on catalog " + c.catalog.hash() + " but the active catalog is " +
                            active->hash() + "; LLM indices would not line up");
    }
    c.state.best = detail::parameters_from_json(c.router_config, j.at("parameters"));
    if (c.state.best.parameter_hash() != j.at("content_hash").get<std::string>()) {
      throw FormatError("checkpoint: parameter content hash mismatch");
    }
    c.state.best_epoch = j.at("epoch").get<std::size_t>();
    c.state.best_score = j.at("validation_score").is_null() ? -std::numeric_limits<double>::infinity()
                                                            : j.at("validation_score").get<double>();
    c.with_resume = j.contains("resume");
    if (c.with_resume) {
      const auto& r = j.at("resume");
      c.state.epoch = r.at("epoch").get<std::size_t>();
      c.state.since_best = r.at("since_best").get<std::size_t>();
      c.state.best_loss = r.at("best_loss").is_null() ? std::numeric_limits<double>::infinity()
                                                      : r.at("best_loss").get<double>();
      c.state.stopped = r.at("stopped").get<bool>();
      c.state.rng_state = r.at("rng_state").get<std::string>();
      c.state.optimizer = OptimizerState::from_json(r.at("optimizer"));
      c.state.model = detail::parameters_from_json(c.router_config, r.at("parameters"));
      if (c.state.model.parameter_hash() != r.at("content_hash").get<std::string>()) {
        throw FormatError("checkpoint: resume parameter hash mismatch");
      }
    } else {
      c.state.model = c.state.best.clone();
      c.state.epoch = c.state.best_epoch;
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return c;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  write_file_atomic(path, checkpoint_to_json(c).dump() + "\n");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path, const data::LLMCatalog* active = nullptr) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError("checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j, active);
}

}  // namespace radialrouter::train
