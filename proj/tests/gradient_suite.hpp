#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "radialrouter/numcore/grad_check.hpp"
#include "radialrouter/training.hpp"

namespace gradient_suite {

using namespace radialrouter;
using num::NamedTensor;
using num::Shape;
using num::Tape;
using num::Tensor;

inline constexpr double kStep = 1e-4;
inline constexpr double kTolerance = 1e-4;

struct Case {
  std::string name;
  std::function<Tensor(Tape&)> f;
  std::vector<NamedTensor> params;
};

inline Tensor random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Tensor t(Shape{r, c}, true);
  for (double& v : t.values()) v = normal(rng);
  return t;
}

/// Random fixed linear functional, so every output element gets a distinct weight.
inline std::function<Tensor(Tape&, const Tensor&)> probe(std::size_t size, std::mt19937_64& rng) {
  Tensor w(Shape{size, 1});
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : w.values()) v = normal(rng);
  return [w](Tape& tape, const Tensor& x) {
    return num::matmul(tape, num::reshape(tape, x, Shape{1, x.size()}), w);
  };
}

inline std::vector<double> random_distribution(std::size_t n, std::mt19937_64& rng) {
  std::vector<double> logits(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : logits) v = normal(rng);
  return num::softmax(logits);
}

/// Jitters every parameter so no ReLU input sits exactly at zero (a fresh
/// model has zero biases, and a fully negative attention row then feeds an
/// exact zero into the head).
inline void generic_point(const std::vector<NamedTensor>& params, std::mt19937_64& rng, double scale = 0.1) {
  std::normal_distribution<double> normal(0.0, scale);
  for (const auto& p : params) {
    Tensor t = p.tensor;
    for (double& v : t.values()) v += normal(rng);
  }
}

/// Toy corpus for the full objective: n LLMs, `count` queries in two groups.
inline data::Corpus toy_corpus(std::size_t n, std::size_t d_enc, std::size_t count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<data::LLMEntry> entries;
  for (std::size_t i = 0; i < n; ++i) entries.push_back({"m" + std::to_string(i), 0.5 + 2.0 * unit(rng)});
  data::Corpus c;
  c.catalog = data::LLMCatalog(entries);
  std::vector<double> emb;
  for (std::size_t q = 0; q < count; ++q) {
    data::QueryRecord r;
    r.id = "q" + std::to_string(q);
    r.dataset_tag = q % 2 ? "odd" : "even";
    for (std::size_t i = 0; i < n; ++i) r.perf.push_back(unit(rng));
    r.embedding_row = q;
    c.queries.push_back(r);
    for (std::size_t k = 0; k < d_enc; ++k) emb.push_back(normal(rng));
  }
  data::EmbeddingHeader h;
  h.d_enc = d_enc;
  h.count = count;
  c.embeddings = data::EmbeddingTable(h, emb);
  return c;
}

/// Full training objective on n=3, d=8, T=2 with a batch of 4: KL selection
/// loss plus 0.5 times the query-query term, every router parameter checked.
inline Case full_objective(std::uint64_t seed, loss::SelectionLoss selection = loss::SelectionLoss::kl) {
  std::mt19937_64 rng(seed);
  auto corpus = std::make_shared<data::Corpus>(toy_corpus(3, 6, 4, rng));
  router::RouterConfig rc;
  rc.encoder_dim = 6;
  rc.dim = 8;
  rc.layers = 2;
  rc.heads = 2;
  rc.satellites = 3;
  rc.mlp_hidden = 8;
  const auto model = router::RouterModel::init(rc, seed);
  generic_point(model.parameters(), rng);
  loss::LossConfig lc;
  lc.lambda = 0.5;
  lc.negatives = 2;
  lc.top_k = 1;
  lc.selection = selection;
  const auto scores = train::precompute_scores(corpus->queries, corpus->catalog, 0.02);
  std::vector<std::vector<double>> targets;
  for (const auto& s : scores) targets.push_back(router::target_distribution(s));
  const std::vector<std::size_t> groups = {0, 0, 1, 1};
  const auto pairs = train::sample_batch_pairs(groups, lc.negatives, rng);
  const std::vector<std::size_t> batch = {0, 1, 2, 3};
  return {"full_objective_" + loss::to_string(selection),
          [=](Tape& tape) { return train::batch_objective(tape, model, *corpus, batch, scores, targets, pairs, lc); },
          model.parameters()};
}

inline std::vector<Case> op_cases(std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::vector<Case> cases;
  auto unary = [&](std::string name, std::size_t r, std::size_t c, std::size_t out_size,
                   std::function<Tensor(Tape&, const Tensor&)> op) {
    Tensor x = random_tensor(r, c, rng);
    auto p = probe(out_size, rng);
    cases.push_back({std::move(name), [=](Tape& t) { return p(t, op(t, x)); }, {{"x", x}}});
  };

  {
    Tensor a = random_tensor(3, 4, rng), b = random_tensor(4, 2, rng);
    auto p = probe(6, rng);
    cases.push_back({"matmul", [=](Tape& t) { return p(t, num::matmul(t, a, b)); }, {{"a", a}, {"b", b}}});
  }
  {
    Tensor a = random_tensor(2, 4, rng), b = random_tensor(3, 4, rng);
    auto p = probe(6, rng);
    cases.push_back({"matmul_nt", [=](Tape& t) { return p(t, num::matmul_nt(t, a, b)); }, {{"a", a}, {"b", b}}});
  }
  {
    Tensor a = random_tensor(2, 3, rng), b = random_tensor(2, 3, rng);
    auto p = probe(6, rng);
    cases.push_back({"add", [=](Tape& t) { return p(t, num::add(t, a, b)); }, {{"a", a}, {"b", b}}});
  }
  {
    Tensor x = random_tensor(3, 4, rng), bias = random_tensor(1, 4, rng);
    auto p = probe(12, rng);
    cases.push_back(
        {"add_row", [=](Tape& t) { return p(t, num::add_row(t, x, bias)); }, {{"x", x}, {"bias", bias}}});
  }
  unary("scale", 2, 3, 6, [](Tape& t, const Tensor& x) { return num::scale(t, x, -1.7); });
  {
    Tensor a = random_tensor(1, 3, rng), b = random_tensor(2, 3, rng);
    auto p = probe(9, rng);
    cases.push_back({"concat_rows", [=](Tape& t) { return p(t, num::concat_rows(t, {a, b})); },
                     {{"a", a}, {"b", b}}});
  }
  {
    Tensor a = random_tensor(2, 1, rng), b = random_tensor(2, 3, rng);
    auto p = probe(8, rng);
    cases.push_back({"concat_cols",
                     [=](Tape& t) {
                       const Tensor parts[] = {a, b};
                       return p(t, num::concat_cols(t, parts));
                     },
                     {{"a", a}, {"b", b}}});
  }
  unary("slice_cols", 3, 5, 6, [](Tape& t, const Tensor& x) { return num::slice_cols(t, x, 1, 2); });
  unary("slice_rows", 4, 3, 6, [](Tape& t, const Tensor& x) { return num::slice_rows(t, x, 1, 2); });
  unary("reshape", 2, 6, 12, [](Tape& t, const Tensor& x) { return num::reshape(t, x, Shape{3, 4}); });
  unary("relu", 3, 4, 12, [](Tape& t, const Tensor& x) { return num::relu(t, x); });
  unary("softmax_row", 1, 5, 5, [](Tape& t, const Tensor& x) { return num::softmax_row(t, x); });
  {
    Tensor x = random_tensor(3, 6, rng), g = random_tensor(1, 6, rng), b = random_tensor(1, 6, rng);
    auto p = probe(18, rng);
    cases.push_back({"layer_norm", [=](Tape& t) { return p(t, num::layer_norm(t, x, g, b)); },
                     {{"x", x}, {"gain", g}, {"bias", b}}});
  }
  unary("sum", 3, 3, 1, [](Tape& t, const Tensor& x) { return num::sum(t, x); });
  {
    Tensor a = random_tensor(1, 1, rng), b = random_tensor(1, 1, rng), c = random_tensor(1, 1, rng);
    cases.push_back({"add_scalars",
                     [=](Tape& t) {
                       const Tensor terms[] = {a, num::scale(t, b, 2.0), c};
                       return num::add_scalars(t, terms);
                     },
                     {{"a", a}, {"b", b}, {"c", c}}});
  }
  unary("gather_cols", 1, 5, 3, [](Tape& t, const Tensor& x) {
    const std::size_t idx[] = {4, 0, 2};
    return num::gather_cols(t, x, idx);
  });
  {
    Tensor a = random_tensor(1, 5, rng), b = random_tensor(1, 5, rng);
    cases.push_back({"cosine_similarity", [=](Tape& t) { return num::cosine_similarity(t, a, b); },
                     {{"a", a}, {"b", b}}});
  }
  {
    Tensor x = random_tensor(1, 4, rng);
    cases.push_back({"cross_entropy_with_logits", [=](Tape& t) { return num::cross_entropy_with_logits(t, x, 2); },
                     {{"logits", x}}});
  }
  for (std::size_t heads : {1, 2, 4}) {
    const std::size_t d = 8;
    Tensor q = random_tensor(1, d, rng), ctx = random_tensor(3, d, rng);
    num::AttentionWeights w{random_tensor(d, d, rng, 0.4), random_tensor(d, d, rng, 0.4),
                            random_tensor(d, d, rng, 0.4), random_tensor(d, d, rng, 0.4)};
    auto p = probe(d, rng);
    cases.push_back({"multi_head_attention_h" + std::to_string(heads),
                     [=](Tape& t) { return p(t, num::multi_head_attention(t, q, ctx, w, heads)); },
                     {{"query", q}, {"context", ctx}, {"wq", w.wq}, {"wk", w.wk}, {"wv", w.wv}, {"wo", w.wo}}});
  }
  {
    Tensor q = random_tensor(1, 4, rng), ctx = random_tensor(3, 4, rng);
    Tensor wq = random_tensor(4, 4, rng, 0.5), wk = random_tensor(4, 4, rng, 0.5), wv = random_tensor(4, 4, rng, 0.5);
    auto p = probe(4, rng);
    cases.push_back({"scaled_dot_attention",
                     [=](Tape& t) { return p(t, num::scaled_dot_attention(t, q, ctx, wq, wk, wv)); },
                     {{"query", q}, {"context", ctx}, {"wq", wq}, {"wk", wk}, {"wv", wv}}});
  }
  {
    Tensor x = random_tensor(1, 4, rng);
    const auto target = random_distribution(4, rng);
    cases.push_back({"kl_loss", [=](Tape& t) { return loss::kl_loss(t, num::softmax_row(t, x), target); },
                     {{"logits", x}}});
  }
  {
    Tensor x = random_tensor(1, 4, rng);
    cases.push_back({"ce_loss", [=](Tape& t) { return loss::ce_loss(t, num::softmax_row(t, x), 1); },
                     {{"logits", x}}});
  }
  {
    Tensor x = random_tensor(1, 6, rng);
    const std::vector<double> scores = {0.3, -0.2, 0.9, 0.1, 0.5, -0.7};
    cases.push_back({"ql_contrastive_loss",
                     [=](Tape& t) { return loss::ql_contrastive_loss(t, num::softmax_row(t, x), scores, 2); },
                     {{"logits", x}}});
  }
  {
    Tensor a = random_tensor(1, 5, rng), pos = random_tensor(1, 5, rng);
    Tensor n1 = random_tensor(1, 5, rng), n2 = random_tensor(1, 5, rng);
    cases.push_back({"qq_contrastive_loss",
                     [=](Tape& t) {
                       const Tensor negs[] = {n1, n2};
                       return loss::qq_contrastive_loss(t, a, pos, negs);
                     },
                     {{"anchor", a}, {"positive", pos}, {"neg1", n1}, {"neg2", n2}}});
  }
  for (auto backbone : {rf::Backbone::radial, rf::Backbone::star, rf::Backbone::transformer}) {
    rf::RadialFormerConfig cfg{4, 8, 2, 2, false, backbone};
    auto params = rf::RadialFormerParams::init(cfg, rng);
    Tensor query = random_tensor(1, 8, rng);
    std::vector<NamedTensor> named{{"query", query}};
    params.collect(named);
    generic_point(named, rng);
    auto p = probe(4 * 8, rng);
    cases.push_back({"radialformer_" + rf::to_string(backbone),
                     [=](Tape& t) { return p(t, rf::forward(t, query, params, cfg).satellite_matrix(t)); },
                     named});
  }
  for (auto backbone : {rf::Backbone::radial, rf::Backbone::mlp}) {
    router::RouterConfig rc;
    rc.encoder_dim = 5;
    rc.dim = 8;
    rc.layers = 2;
    rc.heads = 2;
    rc.satellites = 3;
    rc.mlp_hidden = 6;
    rc.backbone = backbone;
    const auto model = router::RouterModel::init(rc, 11);
    generic_point(model.parameters(), rng);
    std::vector<double> raw(5);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : raw) v = normal(rng);
    const auto target = random_distribution(3, rng);
    cases.push_back({"router_forward_" + rf::to_string(backbone),
                     [=](Tape& t) { return loss::kl_loss(t, model.forward(t, raw).probabilities, target); },
                     model.parameters()});
  }
  return cases;
}

inline std::vector<Case> all_cases() {
  auto cases = op_cases();
  cases.push_back(full_objective(3, loss::SelectionLoss::kl));
  cases.push_back(full_objective(4, loss::SelectionLoss::ce));
  return cases;
}

}  // namespace gradient_suite
