#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "radialrouter/numcore/ops.hpp"

namespace radialrouter::num {

/// Projection weights of one multi-head attention block. Each of wq/wk/wv is
/// d x d; head j owns the column block [j*d/h, (j+1)*d/h). wo is d x d.
struct AttentionWeights {
  Tensor wq;
  Tensor wk;
  Tensor wv;
  Tensor wo;
};

/// softmax(Q K^T / sqrt(d_k)) V for already-projected Q (1 x d_k), K (m x d_k),
/// V (m x d_v).
inline Tensor attention_core(Tape& tape, const Tensor& q, const Tensor& k, const Tensor& v) {
  if (k.rows() == 0) throw DimensionError("attention: empty context");
  if (k.rows() != v.rows()) throw DimensionError("attention: key/value row mismatch");
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(k.cols()));
  const Tensor logits = scale(tape, matmul_nt(tape, q, k), inv_scale);
  const Tensor weights = softmax_row(tape, logits);
  return matmul(tape, weights, v);
}

/// Single-head scaled dot-product attention of a query row over a context.
inline Tensor scaled_dot_attention(Tape& tape, const Tensor& query, const Tensor& context,
                                   const Tensor& wq, const Tensor& wk, const Tensor& wv) {
  if (context.rows() == 0) throw DimensionError("scaled_dot_attention: context has no rows");
  ++counters().attention_calls;
  const Tensor q = matmul(tape, query, wq);
  const Tensor k = matmul(tape, context, wk);
  const Tensor v = matmul(tape, context, wv);
  return attention_core(tape, q, k, v);
}

/// Multi-head attention of one query row (1 x d) over a context (m x d):
/// heads attend in parallel on d/h-wide slices, are concatenated, then
/// mapped through wo.
inline Tensor multi_head_attention(Tape& tape, const Tensor& query, const Tensor& context,
                                   const AttentionWeights& w, std::size_t heads) {
  const std::size_t d = query.cols();
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("multi_head_attention: dimension " + std::to_string(d) +
                      " not divisible by " + std::to_string(heads) + " heads");
  }
  if (context.rows() == 0) throw DimensionError("multi_head_attention: context has no rows");
  if (context.cols() != d) throw DimensionError("multi_head_attention: context width mismatch");
  ++counters().attention_calls;
  const Tensor q = matmul(tape, query, w.wq);
  const Tensor k = matmul(tape, context, w.wk);
  const Tensor v = matmul(tape, context, w.wv);
  Tensor merged;
  if (heads == 1) {
    merged = attention_core(tape, q, k, v);
  } else {
    const std::size_t dh = d / heads;
    std::vector<Tensor> parts;
    parts.reserve(heads);
    for (std::size_t j = 0; j < heads; ++j) {
      parts.push_back(attention_core(tape, slice_cols(tape, q, j * dh, dh),
                                     slice_cols(tape, k, j * dh, dh),
                                     slice_cols(tape, v, j * dh, dh)));
    }
    merged = concat_cols(tape, parts);
  }
  return matmul(tape, merged, w.wo);
}

}  // namespace radialrouter::num
