#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "radialrouter/data.hpp"
#include "radialrouter/losses.hpp"
#include "radialrouter/radialformer.hpp"

namespace radialrouter::router {

using nlohmann::json;
using num::NamedTensor;
using num::Shape;
using num::Tape;
using num::Tensor;

struct RouterConfig {
  std::size_t encoder_dim = 768;  // width of the external embeddings
  std::size_t dim = 128;
  std::size_t layers = 6;
  std::size_t heads = 4;
  std::size_t satellites = 11;
  std::size_t mlp_hidden = 128;
  bool shared_layers = false;
  rf::Backbone backbone = rf::Backbone::radial;

  rf::RadialFormerConfig radialformer() const {
    return {satellites, dim, layers, heads, shared_layers, backbone};
  }

  void validate() const {
    if (encoder_dim < 1) throw ConfigError("router: encoder dimension must be positive");
    if (mlp_hidden < 1) throw ConfigError("router: mlp hidden width must be positive");
    radialformer().validate();
  }

  json to_json() const {
    return {{"encoder_dim", encoder_dim}, {"dim", dim},
            {"layers", layers},           {"heads", heads},
            {"satellites", satellites},   {"mlp_hidden", mlp_hidden},
            {"shared_layers", shared_layers}, {"backbone", rf::to_string(backbone)}};
  }

  static RouterConfig from_json(const json& j) {
    RouterConfig c;
    c.encoder_dim = j.value("encoder_dim", c.encoder_dim);
    c.dim = j.value("dim", c.dim);
    c.layers = j.value("layers", c.layers);
    c.heads = j.value("heads", c.heads);
    c.satellites = j.value("satellites", c.satellites);
    c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
    c.shared_layers = j.value("shared_layers", c.shared_layers);
    if (j.contains("backbone")) c.backbone = rf::backbone_from_string(j.at("backbone").get<std::string>());
    return c;
  }
};

/// Trainable affine map from external encoder space into the router width.
struct ProjectionAdapter {
  Tensor weight;  // d_enc x d
  Tensor bias;    // 1 x d
};

inline Tensor project_embedding(Tape& tape, const Tensor& raw, const ProjectionAdapter& adapter) {
  if (raw.rows() != 1 || raw.cols() != adapter.weight.rows()) {
    throw DimensionError("project_embedding: raw embedding is " + num::to_string(raw.shape()) +
                         ", adapter expects 1x" + std::to_string(adapter.weight.rows()));
  }
  return num::add_row(tape, num::matmul(tape, raw, adapter.weight), adapter.bias);
}

/// Two-layer ReLU MLP applied to every row; one scalar per row.
struct RoutingHead {
  Tensor w1;  // in x hidden
  Tensor b1;  // 1 x hidden
  Tensor w2;  // hidden x 1
  Tensor b2;  // 1 x 1
};

/// Scores of the n satellite rows as a 1 x n tensor.
inline Tensor predict_scores(Tape& tape, const Tensor& rows, const RoutingHead& head) {
  const Tensor hidden = num::relu(tape, num::add_row(tape, num::matmul(tape, rows, head.w1), head.b1));
  const Tensor scores = num::add_row(tape, num::matmul(tape, hidden, head.w2), head.b2);
  return num::reshape(tape, scores, Shape{1, rows.rows()});
}

inline Tensor routing_probability(Tape& tape, const Tensor& scores) { return num::softmax_row(tape, scores); }

inline std::vector<double> routing_probability(std::span<const double> scores) { return num::softmax(scores); }

struct RoutingDecision {
  std::vector<double> predicted_scores;
  std::vector<double> probabilities;
  std::size_t chosen_index = 0;
  std::string chosen_name;

  json to_json() const {
    return {{"chosen_name", chosen_name},
            {"chosen_index", chosen_index},
            {"probabilities", probabilities},
            {"predicted_scores", predicted_scores}};
  }
};

/// Picks the most probable LLM; exact ties resolve to the lowest index.
inline RoutingDecision select(std::span<const double> probabilities, const data::LLMCatalog& catalog) {
  if (probabilities.empty() || catalog.empty()) throw ConfigError("select: empty LLM pool");
  if (probabilities.size() != catalog.size()) {
    throw DimensionError("select: " + std::to_string(probabilities.size()) + " probabilities for " +
                         std::to_string(catalog.size()) + " LLMs");
  }
  RoutingDecision d;
  d.probabilities.assign(probabilities.begin(), probabilities.end());
  d.chosen_index = loss::argmax_lowest(probabilities);
  d.chosen_name = catalog[d.chosen_index].name;
  return d;
}

/// performance - alpha * cost.
inline double true_score(double performance, double cost, double alpha) {
  if (!(cost >= 0.0)) throw ValidationError("true_score: cost must be non-negative");
  if (!(alpha >= 0.0)) throw ValidationError("true_score: alpha must be non-negative");
  return performance - alpha * cost;
}

/// Softmax of one query's true-score vector.
inline std::vector<double> target_distribution(std::span<const double> scores) {
  for (double s : scores) {
    if (!std::isfinite(s)) throw ValidationError("target_distribution: non-finite score");
  }
  return num::softmax(scores);
}

/// Adapter + backbone + scoring head. Parameters are shared handles: copies
/// of a RouterModel alias the same weights; use `clone()` for a snapshot.
class RouterModel {
 public:
  struct Forward {
    Tensor projected;      // 1 x d
    Tensor scores;         // 1 x n
    Tensor probabilities;  // 1 x n
  };

  RouterModel() = default;

  static RouterModel init(const RouterConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    RouterModel m;
    m.config_ = cfg;
    std::mt19937_64 rng(seed);
    m.adapter_.weight = rf::init_weight(cfg.encoder_dim, cfg.dim, rng);
    m.adapter_.bias = Tensor(Shape{1, cfg.dim}, true);
    m.backbone_ = rf::RadialFormerParams::init(cfg.radialformer(), rng);
    const std::size_t head_in = cfg.backbone == rf::Backbone::mlp ? 2 * cfg.dim : cfg.dim;
    m.head_.w1 = rf::init_weight(head_in, cfg.mlp_hidden, rng);
    m.head_.b1 = Tensor(Shape{1, cfg.mlp_hidden}, true);
    m.head_.w2 = rf::init_weight(cfg.mlp_hidden, 1, rng);
    m.head_.b2 = Tensor(Shape{1, 1}, true);
    return m;
  }

  const RouterConfig& config() const noexcept { return config_; }
  const ProjectionAdapter& adapter() const noexcept { return adapter_; }
  const rf::RadialFormerParams& backbone() const noexcept { return backbone_; }
  const RoutingHead& head() const noexcept { return head_; }

  Forward forward(Tape& tape, std::span<const double> raw) const {
    if (raw.size() != config_.encoder_dim) {
      throw DimensionError("router: embedding has " + std::to_string(raw.size()) + " dims, expected " +
                           std::to_string(config_.encoder_dim));
    }
    const Tensor input = Tensor::row(std::vector<double>(raw.begin(), raw.end()));
    Forward f;
    f.projected = project_embedding(tape, input, adapter_);
    f.scores = scores_from_projection(tape, f.projected);
    f.probabilities = routing_probability(tape, f.scores);
    return f;
  }

  Tensor scores_from_projection(Tape& tape, const Tensor& projected) const {
    if (config_.backbone == rf::Backbone::mlp) {
      std::vector<Tensor> rows;
      rows.reserve(config_.satellites);
      for (const auto& m : backbone_.model_embeddings) {
        const Tensor pair[] = {projected, m};
        rows.push_back(num::concat_cols(tape, pair));
      }
      return predict_scores(tape, num::concat_rows(tape, rows), head_);
    }
    const auto state = rf::forward(tape, projected, backbone_, config_.radialformer());
    return predict_scores(tape, state.satellite_matrix(tape), head_);
  }

  RoutingDecision route(std::span<const double> raw, const data::LLMCatalog& catalog) const {
    Tape tape(false);
    const auto f = forward(tape, raw);
    auto d = select(f.probabilities.values(), catalog);
    d.predicted_scores.assign(f.scores.values().begin(), f.scores.values().end());
    return d;
  }

  std::size_t route_index(std::span<const double> raw) const {
    Tape tape(false);
    return loss::argmax_lowest(forward(tape, raw).probabilities.values());
  }

  /// Visits every parameter in a fixed order with its stable name.
  template <typename F>
  void visit(F&& f) {
    f("adapter.weight", adapter_.weight);
    f("adapter.bias", adapter_.bias);
    for (std::size_t i = 0; i < backbone_.model_embeddings.size(); ++i) {
      f("radialformer.model_embedding." + std::to_string(i), backbone_.model_embeddings[i]);
    }
    for (std::size_t t = 0; t < backbone_.layers.size(); ++t) {
      const std::string lp = "radialformer.layer." + std::to_string(t) + ".";
      auto& w = backbone_.layers[t];
      for (auto& [role, a] : {std::pair<std::string, num::AttentionWeights*>{"satellite", &w.satellite_attention},
                              {"relay", &w.relay_attention}}) {
        f(lp + role + ".wq", a->wq);
        f(lp + role + ".wk", a->wk);
        f(lp + role + ".wv", a->wv);
        f(lp + role + ".wo", a->wo);
      }
      f(lp + "satellite_norm.gain", w.satellite_norm.gain);
      f(lp + "satellite_norm.bias", w.satellite_norm.bias);
      f(lp + "relay_norm.gain", w.relay_norm.gain);
      f(lp + "relay_norm.bias", w.relay_norm.bias);
    }
    f("head.w1", head_.w1);
    f("head.b1", head_.b1);
    f("head.w2", head_.w2);
    f("head.b2", head_.b2);
  }

  std::vector<NamedTensor> parameters() const {
    std::vector<NamedTensor> out;
    const_cast<RouterModel*>(this)->visit(
        [&out](const std::string& name, Tensor& t) { out.push_back({name, t}); });
    return out;
  }

  RouterModel clone() const {
    RouterModel copy = *this;
    copy.visit([](const std::string&, Tensor& t) { t = t.clone(); });
    return copy;
  }

  /// Fingerprint of every parameter value, in visit order.
  std::string parameter_hash() const {
    Fnv1a h;
    for (const auto& p : parameters()) {
      h.update(p.name);
      h.update(p.tensor.values());
    }
    return h.hex();
  }

 private:
  RouterConfig config_;
  ProjectionAdapter adapter_;
  rf::RadialFormerParams backbone_;
  RoutingHead head_;
};

}  // namespace radialrouter::router
