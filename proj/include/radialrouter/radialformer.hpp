#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "radialrouter/numcore.hpp"

namespace radialrouter::rf {

using num::AttentionWeights;
using num::NamedTensor;
using num::Shape;
using num::Tape;
using num::Tensor;

/// Backbone topology. `radial` is the router's architecture; the others exist
/// for ablations: `star` adds ring connections between neighbouring
/// satellites, `transformer` lets every node attend to every node, and `mlp`
/// bypasses attention entirely (handled by the router's head).
enum class Backbone { radial, star, transformer, mlp };

inline std::string to_string(Backbone b) {
  switch (b) {
    case Backbone::radial: return "radialformer";
    case Backbone::star: return "star_transformer_topology";
    case Backbone::transformer: return "full_attention_transformer";
    case Backbone::mlp: return "mlp_only";
  }
  return "?";
}

inline Backbone backbone_from_string(const std::string& s) {
  for (auto b : {Backbone::radial, Backbone::star, Backbone::transformer, Backbone::mlp}) {
    if (s == to_string(b)) return b;
  }
  if (s == "radial") return Backbone::radial;
  if (s == "star") return Backbone::star;
  if (s == "transformer") return Backbone::transformer;
  if (s == "mlp") return Backbone::mlp;
  throw ConfigError("unknown backbone '" + s + "'");
}

struct RadialFormerConfig {
  std::size_t satellites = 11;  // candidate LLM count n
  std::size_t dim = 128;        // hidden width d
  std::size_t layers = 6;       // T
  std::size_t heads = 4;
  bool shared_layers = false;
  Backbone backbone = Backbone::radial;

  void validate() const {
    if (satellites < 1) throw ConfigError("radialformer: need at least one satellite");
    if (layers < 1) throw ConfigError("radialformer: need at least one layer");
    if (dim < 2) throw ConfigError("radialformer: hidden dimension must be at least 2");
    if (heads < 1 || dim % heads != 0) {
      throw ConfigError("radialformer: dimension " + std::to_string(dim) + " not divisible by " +
                        std::to_string(heads) + " heads");
    }
  }
};

struct NormWeights {
  Tensor gain;
  Tensor bias;
};

struct LayerWeights {
  AttentionWeights satellite_attention;
  AttentionWeights relay_attention;
  NormWeights satellite_norm;
  NormWeights relay_norm;
};

/// Uniform in +-1/sqrt(fan_in).
inline Tensor init_weight(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  Tensor t(Shape{fan_in, fan_out}, true);
  for (double& v : t.values()) v = u(rng);
  return t;
}

inline Tensor constant_row(std::size_t d, double value) {
  Tensor t(Shape{1, d}, std::vector<double>(d, value), true);
  return t;
}

struct RadialFormerParams {
  std::vector<Tensor> model_embeddings;  // n rows of 1 x d
  std::vector<LayerWeights> layers;      // T entries, or one when shared
  bool shared_layers = false;

  const LayerWeights& layer(std::size_t t) const {
    if (t < 1) throw IndexError("radialformer: layers are numbered from 1");
    return shared_layers ? layers.front() : layers.at(t - 1);
  }

  static RadialFormerParams init(const RadialFormerConfig& cfg, std::mt19937_64& rng) {
    cfg.validate();
    RadialFormerParams p;
    p.shared_layers = cfg.shared_layers;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < cfg.satellites; ++i) {
      Tensor m(Shape{1, cfg.dim}, true);
      for (double& v : m.values()) v = 0.02 * normal(rng);
      p.model_embeddings.push_back(m);
    }
    const std::size_t count = cfg.backbone == Backbone::mlp ? 0 : (cfg.shared_layers ? 1 : cfg.layers);
    const std::size_t d = cfg.dim;
    for (std::size_t t = 0; t < count; ++t) {
      LayerWeights w;
      for (AttentionWeights* a : {&w.satellite_attention, &w.relay_attention}) {
        a->wq = init_weight(d, d, rng);
        a->wk = init_weight(d, d, rng);
        a->wv = init_weight(d, d, rng);
        a->wo = init_weight(d, d, rng);
      }
      w.satellite_norm = {constant_row(d, 1.0), constant_row(d, 0.0)};
      w.relay_norm = {constant_row(d, 1.0), constant_row(d, 0.0)};
      p.layers.push_back(std::move(w));
    }
    return p;
  }

  /// Appends every trainable tensor with a stable name.
  void collect(std::vector<NamedTensor>& out, const std::string& prefix = "radialformer.") const {
    for (std::size_t i = 0; i < model_embeddings.size(); ++i) {
      out.push_back({prefix + "model_embedding." + std::to_string(i), model_embeddings[i]});
    }
    for (std::size_t t = 0; t < layers.size(); ++t) {
      const std::string lp = prefix + "layer." + std::to_string(t) + ".";
      const auto& w = layers[t];
      for (const auto& [role, a] : {std::pair<const char*, const AttentionWeights*>{"satellite", &w.satellite_attention},
                                    {"relay", &w.relay_attention}}) {
        out.push_back({lp + role + ".wq", a->wq});
        out.push_back({lp + role + ".wk", a->wk});
        out.push_back({lp + role + ".wv", a->wv});
        out.push_back({lp + role + ".wo", a->wo});
      }
      out.push_back({lp + "satellite_norm.gain", w.satellite_norm.gain});
      out.push_back({lp + "satellite_norm.bias", w.satellite_norm.bias});
      out.push_back({lp + "relay_norm.gain", w.relay_norm.gain});
      out.push_back({lp + "relay_norm.bias", w.relay_norm.bias});
    }
  }
};

/// Relay r^t and satellites S^t. Within a layer the satellites advance first
/// (`satellites_ahead`), then the relay catches up and `step` increments.
struct RadialState {
  Tensor relay;
  std::vector<Tensor> satellites;
  std::size_t step = 0;
  bool satellites_ahead = false;

  Tensor satellite_matrix(Tape& tape) const { return num::concat_rows(tape, satellites); }
};

inline RadialState init_state(const Tensor& query, const RadialFormerParams& params,
                              const RadialFormerConfig& cfg) {
  if (query.rows() != 1 || query.cols() != cfg.dim) {
    throw ConfigError("radialformer: query embedding is " + num::to_string(query.shape()) +
                      ", expected 1x" + std::to_string(cfg.dim));
  }
  if (params.model_embeddings.size() != cfg.satellites) {
    throw ConfigError("radialformer: parameter set has " + std::to_string(params.model_embeddings.size()) +
                      " model embeddings, config expects " + std::to_string(cfg.satellites));
  }
  RadialState s;
  s.relay = query;
  s.satellites = params.model_embeddings;
  return s;
}

/// Context rows for satellite i: [s_i; m_i; r] for the radial topology, with
/// ring neighbours [s_{i-1}; s_i; s_{i+1}; m_i; r] for the star ablation.
inline std::vector<Tensor> satellite_context(const RadialState& state, std::size_t i,
                                             const RadialFormerParams& params, Backbone backbone) {
  const std::size_t n = state.satellites.size();
  if (backbone == Backbone::star) {
    return {state.satellites[(i + n - 1) % n], state.satellites[i], state.satellites[(i + 1) % n],
            params.model_embeddings[i], state.relay};
  }
  return {state.satellites[i], params.model_embeddings[i], state.relay};
}

/// New state of satellite i at layer t: LayerNorm(ReLU(MHAttn(s_i, C_i))).
inline Tensor update_satellite(Tape& tape, const RadialState& state, std::size_t i,
                               const RadialFormerParams& params, const RadialFormerConfig& cfg,
                               std::size_t t) {
  if (state.step + 1 != t || state.satellites_ahead) {
    throw ContractError("update_satellite: state is at step " + std::to_string(state.step) +
                        ", cannot compute layer " + std::to_string(t));
  }
  if (i >= state.satellites.size()) {
    throw IndexError("update_satellite: satellite " + std::to_string(i) + " out of range");
  }
  const auto& w = params.layer(t);
  const auto ctx = satellite_context(state, i, params, cfg.backbone);
  const Tensor context = num::concat_rows(tape, ctx);
  const Tensor attended = num::multi_head_attention(tape, state.satellites[i], context,
                                                    w.satellite_attention, cfg.heads);
  return num::layer_norm(tape, num::relu(tape, attended), w.satellite_norm.gain, w.satellite_norm.bias);
}

/// Advances all satellites to layer t (each reads only the step t-1 state).
inline void advance_satellites(Tape& tape, RadialState& state, const RadialFormerParams& params,
                               const RadialFormerConfig& cfg, std::size_t t) {
  std::vector<Tensor> next;
  next.reserve(state.satellites.size());
  for (std::size_t i = 0; i < state.satellites.size(); ++i) {
    next.push_back(update_satellite(tape, state, i, params, cfg, t));
  }
  state.satellites = std::move(next);
  state.satellites_ahead = true;
}

/// New relay state at layer t: LayerNorm(ReLU(MHAttn(r, [r; S^t]))). The
/// satellites must already be at layer t.
inline Tensor update_relay(Tape& tape, const RadialState& state, const RadialFormerParams& params,
                           const RadialFormerConfig& cfg, std::size_t t) {
  if (state.step + 1 != t || !state.satellites_ahead) {
    throw ContractError("update_relay: satellites of layer " + std::to_string(t) +
                        " must be updated before the relay");
  }
  const auto& w = params.layer(t);
  std::vector<Tensor> ctx;
  ctx.reserve(state.satellites.size() + 1);
  ctx.push_back(state.relay);
  ctx.insert(ctx.end(), state.satellites.begin(), state.satellites.end());
  const Tensor context = num::concat_rows(tape, ctx);
  const Tensor attended = num::multi_head_attention(tape, state.relay, context, w.relay_attention, cfg.heads);
  return num::layer_norm(tape, num::relu(tape, attended), w.relay_norm.gain, w.relay_norm.bias);
}

inline void advance_relay(Tape& tape, RadialState& state, const RadialFormerParams& params,
                          const RadialFormerConfig& cfg, std::size_t t) {
  state.relay = update_relay(tape, state, params, cfg, t);
  state.step = t;
  state.satellites_ahead = false;
}

/// Full-attention ablation layer: every node attends over [r; S^{t-1}] using
/// the previous layer's states.
inline void advance_transformer_layer(Tape& tape, RadialState& state, const RadialFormerParams& params,
                                      const RadialFormerConfig& cfg, std::size_t t) {
  const auto& w = params.layer(t);
  std::vector<Tensor> nodes;
  nodes.push_back(state.relay);
  nodes.insert(nodes.end(), state.satellites.begin(), state.satellites.end());
  const Tensor context = num::concat_rows(tape, nodes);
  auto update = [&](const Tensor& x, const AttentionWeights& a, const NormWeights& norm) {
    const Tensor attended = num::multi_head_attention(tape, x, context, a, cfg.heads);
    return num::layer_norm(tape, num::relu(tape, attended), norm.gain, norm.bias);
  };
  std::vector<Tensor> next;
  for (const auto& s : state.satellites) next.push_back(update(s, w.satellite_attention, w.satellite_norm));
  state.relay = update(state.relay, w.relay_attention, w.relay_norm);
  state.satellites = std::move(next);
  state.step = t;
}

/// Runs all T layers from the initial state.
inline RadialState forward(Tape& tape, const Tensor& query, const RadialFormerParams& params,
                           const RadialFormerConfig& cfg) {
  if (cfg.backbone == Backbone::mlp) {
    throw ContractError("radialformer: the mlp_only backbone has no attention layers");
  }
  RadialState state = init_state(query, params, cfg);
  for (std::size_t t = 1; t <= cfg.layers; ++t) {
    if (cfg.backbone == Backbone::transformer) {
      advance_transformer_layer(tape, state, params, cfg, t);
    } else {
      advance_satellites(tape, state, params, cfg, t);
      advance_relay(tape, state, params, cfg, t);
    }
  }
  return state;
}

/// Multiply-adds of one multi-head attention of a single query row over an
/// m-row context in width d: projections (2 + 2m) d^2, scores m d, mixing m d.
constexpr std::uint64_t attention_multiply_adds(std::uint64_t d, std::uint64_t m) {
  return (2 + 2 * m) * d * d + 2 * m * d;
}

/// Closed-form multiply-add count of one forward pass. For the radial
/// topology this is T * (n (10 d^2 + 8 d) + 4 d^2 + 2 d): affine in n.
inline std::uint64_t flop_count(const RadialFormerConfig& cfg) {
  cfg.validate();
  const std::uint64_t n = cfg.satellites, d = cfg.dim, t = cfg.layers;
  switch (cfg.backbone) {
    case Backbone::radial:
      return t * (n * attention_multiply_adds(d, 3) + attention_multiply_adds(d, n + 1));
    case Backbone::star:
      return t * (n * attention_multiply_adds(d, 5) + attention_multiply_adds(d, n + 1));
    case Backbone::transformer:
      return t * (n + 1) * attention_multiply_adds(d, n + 1);
    case Backbone::mlp:
      return 0;
  }
  return 0;
}

}  // namespace radialrouter::rf
