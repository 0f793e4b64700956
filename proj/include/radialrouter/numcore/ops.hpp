#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "radialrouter/numcore/tape.hpp"
#include "radialrouter/numcore/tensor.hpp"

namespace radialrouter::num {

inline constexpr double kLayerNormEpsilon = 1e-5;

namespace kernel {

// C(p x r) += A(p x q) * B(q x r)
inline void gemm_nn(const double* a, const double* b, double* c, std::size_t p, std::size_t q,
                    std::size_t r) {
  for (std::size_t i = 0; i < p; ++i) {
    double* crow = c + i * r;
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = a[i * q + k];
      const double* brow = b + k * r;
      for (std::size_t j = 0; j < r; ++j) crow[j] += aik * brow[j];
    }
  }
}

// C(p x r) += A(p x q) * B(r x q)^T
inline void gemm_nt(const double* a, const double* b, double* c, std::size_t p, std::size_t q,
                    std::size_t r) {
  for (std::size_t i = 0; i < p; ++i) {
    const double* arow = a + i * q;
    for (std::size_t j = 0; j < r; ++j) {
      const double* brow = b + j * q;
      double acc = 0.0;
      for (std::size_t k = 0; k < q; ++k) acc += arow[k] * brow[k];
      c[i * r + j] += acc;
    }
  }
}

// C(q x r) += A(p x q)^T * B(p x r)
inline void gemm_tn(const double* a, const double* b, double* c, std::size_t p, std::size_t q,
                    std::size_t r) {
  for (std::size_t i = 0; i < p; ++i) {
    const double* brow = b + i * r;
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = a[i * q + k];
      double* crow = c + k * r;
      for (std::size_t j = 0; j < r; ++j) crow[j] += aik * brow[j];
    }
  }
}

}  // namespace kernel

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

/// a(p x q) * b(q x r)
inline Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions " + to_string(a.shape()) + " * " +
                         to_string(b.shape()));
  }
  const std::size_t p = a.rows(), q = a.cols(), r = b.cols();
  const bool track = tape.tracks(a, b);
  Tensor out(Shape{p, r}, track);
  kernel::gemm_nn(a.values().data(), b.values().data(), out.values().data(), p, q, r);
  counters().multiply_adds += p * q * r;
  if (track) {
    tape.record("matmul", {a, b}, out, [a, b, out, p, q, r] {
      const double* dc = out.grad().data();
      if (a.requires_grad()) kernel::gemm_nt(dc, b.values().data(), a.grad().data(), p, r, q);
      if (b.requires_grad()) kernel::gemm_tn(a.values().data(), dc, b.grad().data(), p, q, r);
    });
  }
  return out;
}

/// a(p x q) * b(r x q)^T
inline Tensor matmul_nt(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: column counts " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
  const std::size_t p = a.rows(), q = a.cols(), r = b.rows();
  const bool track = tape.tracks(a, b);
  Tensor out(Shape{p, r}, track);
  kernel::gemm_nt(a.values().data(), b.values().data(), out.values().data(), p, q, r);
  counters().multiply_adds += p * q * r;
  if (track) {
    tape.record("matmul_nt", {a, b}, out, [a, b, out, p, q, r] {
      const double* dc = out.grad().data();
      if (a.requires_grad()) kernel::gemm_nn(dc, b.values().data(), a.grad().data(), p, r, q);
      if (b.requires_grad()) kernel::gemm_tn(dc, a.values().data(), b.grad().data(), p, r, q);
    });
  }
  return out;
}

inline Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const bool track = tape.tracks(a, b);
  Tensor out(a.shape(), track);
  auto o = out.values();
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] + bv[i];
  if (track) {
    tape.record("add", {a, b}, out, [a, b, out] {
      auto g = out.grad();
      for (const Tensor* t : {&a, &b}) {
        if (!t->requires_grad()) continue;
        auto tg = t->grad();
        for (std::size_t i = 0; i < g.size(); ++i) tg[i] += g[i];
      }
    });
  }
  return out;
}

/// x(m x d) + bias(1 x d), bias broadcast over rows.
inline Tensor add_row(Tape& tape, const Tensor& x, const Tensor& bias) {
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw DimensionError("add_row: bias " + to_string(bias.shape()) + " for " +
                         to_string(x.shape()));
  }
  const std::size_t m = x.rows(), d = x.cols();
  const bool track = tape.tracks(x, bias);
  Tensor out(x.shape(), track);
  auto o = out.values();
  auto xv = x.values();
  auto bv = bias.values();
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < d; ++c) o[r * d + c] = xv[r * d + c] + bv[c];
  }
  if (track) {
    tape.record("add_row", {x, bias}, out, [x, bias, out, m, d] {
      auto g = out.grad();
      if (x.requires_grad()) {
        auto xg = x.grad();
        for (std::size_t i = 0; i < g.size(); ++i) xg[i] += g[i];
      }
      if (bias.requires_grad()) {
        auto bg = bias.grad();
        for (std::size_t r = 0; r < m; ++r) {
          for (std::size_t c = 0; c < d; ++c) bg[c] += g[r * d + c];
        }
      }
    });
  }
  return out;
}

inline Tensor scale(Tape& tape, const Tensor& x, double factor) {
  const bool track = tape.tracks(x);
  Tensor out(x.shape(), track);
  auto o = out.values();
  auto xv = x.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xv[i] * factor;
  if (track) {
    tape.record("scale", {x}, out, [x, out, factor] {
      auto g = out.grad();
      auto xg = x.grad();
      for (std::size_t i = 0; i < g.size(); ++i) xg[i] += g[i] * factor;
    });
  }
  return out;
}

/// Stacks rows of the parts in argument order.
inline Tensor concat_rows(Tape& tape, std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no parts");
  const std::size_t d = parts.front().cols();
  std::size_t m = 0;
  for (const auto& p : parts) {
    if (p.cols() != d) {
      throw DimensionError("concat_rows: column mismatch " + to_string(p.shape()) + " vs d=" +
                           std::to_string(d));
    }
    m += p.rows();
  }
  const bool track = tape.tracks_any(parts);
  Tensor out(Shape{m, d}, track);
  auto o = out.values();
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p.values().begin(), p.values().end(), o.begin() + static_cast<std::ptrdiff_t>(offset));
    offset += p.size();
  }
  if (track) {
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    tape.record("concat_rows", inputs, out, [inputs, out] {
      auto g = out.grad();
      std::size_t off = 0;
      for (const auto& p : inputs) {
        if (p.requires_grad()) {
          auto pg = p.grad();
          for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += g[off + i];
        }
        off += p.size();
      }
    });
  }
  return out;
}

inline Tensor concat_rows(Tape& tape, std::initializer_list<Tensor> parts) {
  return concat_rows(tape, std::span<const Tensor>(parts.begin(), parts.size()));
}

/// Places parts side by side; all parts share the row count.
inline Tensor concat_cols(Tape& tape, std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no parts");
  const std::size_t m = parts.front().rows();
  std::size_t d = 0;
  for (const auto& p : parts) {
    if (p.rows() != m) throw DimensionError("concat_cols: row mismatch");
    d += p.cols();
  }
  const bool track = tape.tracks_any(parts);
  Tensor out(Shape{m, d}, track);
  std::size_t c0 = 0;
  for (const auto& p : parts) {
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < p.cols(); ++c) out(r, c0 + c) = p(r, c);
    }
    c0 += p.cols();
  }
  if (track) {
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    tape.record("concat_cols", inputs, out, [inputs, out, m, d] {
      auto g = out.grad();
      std::size_t col0 = 0;
      for (const auto& p : inputs) {
        if (p.requires_grad()) {
          auto pg = p.grad();
          const std::size_t pc = p.cols();
          for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = 0; c < pc; ++c) pg[r * pc + c] += g[r * d + col0 + c];
          }
        }
        col0 += p.cols();
      }
    });
  }
  return out;
}

inline Tensor slice_cols(Tape& tape, const Tensor& x, std::size_t begin, std::size_t count) {
  if (begin + count > x.cols()) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " + to_string(x.shape()));
  }
  const std::size_t m = x.rows(), d = x.cols();
  const bool track = tape.tracks(x);
  Tensor out(Shape{m, count}, track);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < count; ++c) out(r, c) = x(r, begin + c);
  }
  if (track) {
    tape.record("slice_cols", {x}, out, [x, out, m, d, begin, count] {
      auto g = out.grad();
      auto xg = x.grad();
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < count; ++c) xg[r * d + begin + c] += g[r * count + c];
      }
    });
  }
  return out;
}

inline Tensor slice_rows(Tape& tape, const Tensor& x, std::size_t begin, std::size_t count) {
  if (begin + count > x.rows()) {
    throw IndexError("slice_rows: rows [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of " + to_string(x.shape()));
  }
  const std::size_t d = x.cols();
  const bool track = tape.tracks(x);
  Tensor out(Shape{count, d}, track);
  auto xv = x.values();
  std::copy(xv.begin() + static_cast<std::ptrdiff_t>(begin * d),
            xv.begin() + static_cast<std::ptrdiff_t>((begin + count) * d), out.values().begin());
  if (track) {
    tape.record("slice_rows", {x}, out, [x, out, begin, d] {
      auto g = out.grad();
      auto xg = x.grad();
      for (std::size_t i = 0; i < g.size(); ++i) xg[begin * d + i] += g[i];
    });
  }
  return out;
}

/// Same values, new shape with equal element count.
inline Tensor reshape(Tape& tape, const Tensor& x, Shape shape) {
  if (shape.size() != x.size()) {
    throw DimensionError("reshape: " + to_string(x.shape()) + " -> " + to_string(shape));
  }
  const bool track = tape.tracks(x);
  Tensor out(shape, std::vector<double>(x.values().begin(), x.values().end()), track);
  if (track) {
    tape.record("reshape", {x}, out, [x, out] {
      auto g = out.grad();
      auto xg = x.grad();
      for (std::size_t i = 0; i < g.size(); ++i) xg[i] += g[i];
    });
  }
  return out;
}

/// Elementwise max(x, 0); the subgradient at exactly 0 is 0.
inline Tensor relu(Tape& tape, const Tensor& x) {
  const bool track = tape.tracks(x);
  Tensor out(x.shape(), track);
  auto o = out.values();
  auto xv = x.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  if (track) {
    tape.record("relu", {x}, out, [x, out] {
      auto g = out.grad();
      auto xg = x.grad();
      auto xv2 = x.values();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (xv2[i] > 0.0) xg[i] += g[i];
      }
    });
  }
  return out;
}

/// Numerically stable softmax of one row (max subtracted before exp).
inline void softmax_inplace(std::span<const double> logits, std::span<double> out) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    total += out[i];
  }
  for (double& v : out) v /= total;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw DimensionError("softmax: empty input");
  std::vector<double> out(logits.size());
  softmax_inplace(logits, out);
  return out;
}

/// Row-wise softmax. Each row of the output sums to one.
inline Tensor softmax_row(Tape& tape, const Tensor& x) {
  if (x.cols() == 0 || x.rows() == 0) throw DimensionError("softmax_row: empty input");
  const std::size_t m = x.rows(), k = x.cols();
  const bool track = tape.tracks(x);
  Tensor out(x.shape(), track);
  for (std::size_t r = 0; r < m; ++r) {
    softmax_inplace(x.row_values(r), out.values().subspan(r * k, k));
  }
  if (track) {
    tape.record("softmax_row", {x}, out, [x, out, m, k] {
      auto g = out.grad();
      auto y = out.values();
      auto xg = x.grad();
      for (std::size_t r = 0; r < m; ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < k; ++c) dot += g[r * k + c] * y[r * k + c];
        for (std::size_t c = 0; c < k; ++c) {
          xg[r * k + c] += y[r * k + c] * (g[r * k + c] - dot);
        }
      }
    });
  }
  return out;
}

/// Row-wise layer normalization with population variance; epsilon sits
/// inside the square root.
inline Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain, const Tensor& bias) {
  const std::size_t m = x.rows(), d = x.cols();
  if (d < 2) throw DimensionError("layer_norm: needs at least 2 features, got " + to_string(x.shape()));
  if (gain.shape() != Shape{1, d} || bias.shape() != Shape{1, d}) {
    throw DimensionError("layer_norm: gain/bias must be 1x" + std::to_string(d));
  }
  const bool track = tape.tracks(x, gain, bias);
  Tensor out(x.shape(), track);
  std::vector<double> xhat(m * d);
  std::vector<double> inv_std(m);
  auto xv = x.values();
  auto gv = gain.values();
  auto bv = bias.values();
  auto o = out.values();
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = xv.data() + r * d;
    double mean = 0.0;
    for (std::size_t c = 0; c < d; ++c) mean += row[c];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (row[c] - mean) * (row[c] - mean);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + kLayerNormEpsilon);
    for (std::size_t c = 0; c < d; ++c) {
      xhat[r * d + c] = (row[c] - mean) * inv_std[r];
      o[r * d + c] = xhat[r * d + c] * gv[c] + bv[c];
    }
  }
  if (track) {
    tape.record("layer_norm", {x, gain, bias}, out,
                [x, gain, bias, out, xhat = std::move(xhat), inv_std = std::move(inv_std), m, d] {
                  auto g = out.grad();
                  auto gv2 = gain.values();
                  if (gain.requires_grad() || bias.requires_grad()) {
                    for (std::size_t r = 0; r < m; ++r) {
                      for (std::size_t c = 0; c < d; ++c) {
                        if (gain.requires_grad()) gain.grad()[c] += g[r * d + c] * xhat[r * d + c];
                        if (bias.requires_grad()) bias.grad()[c] += g[r * d + c];
                      }
                    }
                  }
                  if (!x.requires_grad()) return;
                  auto xg = x.grad();
                  const double inv_d = 1.0 / static_cast<double>(d);
                  for (std::size_t r = 0; r < m; ++r) {
                    double sum_dy = 0.0, sum_dy_xhat = 0.0;
                    for (std::size_t c = 0; c < d; ++c) {
                      const double dy = g[r * d + c] * gv2[c];
                      sum_dy += dy;
                      sum_dy_xhat += dy * xhat[r * d + c];
                    }
                    for (std::size_t c = 0; c < d; ++c) {
                      const double dy = g[r * d + c] * gv2[c];
                      xg[r * d + c] += inv_std[r] *
                                       (dy - inv_d * sum_dy - xhat[r * d + c] * inv_d * sum_dy_xhat);
                    }
                  }
                });
  }
  return out;
}

inline Tensor sum(Tape& tape, const Tensor& x) {
  const bool track = tape.tracks(x);
  double total = 0.0;
  for (double v : x.values()) total += v;
  Tensor out(Shape{1, 1}, {total}, track);
  if (track) {
    tape.record("sum", {x}, out, [x, out] {
      const double g = out.grad()[0];
      for (double& v : x.grad()) v += g;
    });
  }
  return out;
}

/// Sum of a list of scalars (1x1 tensors); an empty list gives a constant 0.
inline Tensor add_scalars(Tape& tape, std::span<const Tensor> terms) {
  double total = 0.0;
  for (const auto& t : terms) total += t.item();
  const bool track = tape.tracks_any(terms);
  Tensor out(Shape{1, 1}, {total}, track);
  if (track) {
    std::vector<Tensor> inputs(terms.begin(), terms.end());
    tape.record("add_scalars", inputs, out, [inputs, out] {
      const double g = out.grad()[0];
      for (const auto& t : inputs) {
        if (t.requires_grad()) t.grad()[0] += g;
      }
    });
  }
  return out;
}

/// Picks the listed columns of a single-row tensor, in the given order.
inline Tensor gather_cols(Tape& tape, const Tensor& x, std::span<const std::size_t> indices) {
  if (x.rows() != 1) throw DimensionError("gather_cols: expects a single row");
  for (auto i : indices) {
    if (i >= x.cols()) throw IndexError("gather_cols: index " + std::to_string(i) + " out of range");
  }
  const bool track = tape.tracks(x);
  Tensor out(Shape{1, indices.size()}, track);
  for (std::size_t j = 0; j < indices.size(); ++j) out(0, j) = x(0, indices[j]);
  if (track) {
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    tape.record("gather_cols", {x}, out, [x, out, idx] {
      auto g = out.grad();
      auto xg = x.grad();
      for (std::size_t j = 0; j < idx.size(); ++j) xg[idx[j]] += g[j];
    });
  }
  return out;
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("cosine: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ValidationError("cosine: zero-norm vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Cosine similarity of two rows, as a 1x1 tensor.
inline Tensor cosine_similarity(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.rows() != 1 || a.shape() != b.shape()) {
    throw DimensionError("cosine_similarity: expects two 1xd rows");
  }
  const double c = cosine(a.values(), b.values());
  const bool track = tape.tracks(a, b);
  Tensor out(Shape{1, 1}, {c}, track);
  if (track) {
    tape.record("cosine_similarity", {a, b}, out, [a, b, out, c] {
      const double g = out.grad()[0];
      auto av = a.values();
      auto bv = b.values();
      double na = 0.0, nb = 0.0;
      for (std::size_t i = 0; i < av.size(); ++i) {
        na += av[i] * av[i];
        nb += bv[i] * bv[i];
      }
      const double inv = 1.0 / (std::sqrt(na) * std::sqrt(nb));
      if (a.requires_grad()) {
        auto ag = a.grad();
        for (std::size_t i = 0; i < av.size(); ++i) ag[i] += g * (bv[i] * inv - c * av[i] / na);
      }
      if (b.requires_grad()) {
        auto bg = b.grad();
        for (std::size_t i = 0; i < bv.size(); ++i) bg[i] += g * (av[i] * inv - c * bv[i] / nb);
      }
    });
  }
  return out;
}

inline double log_sum_exp(std::span<const double> x) {
  const double mx = *std::max_element(x.begin(), x.end());
  double total = 0.0;
  for (double v : x) total += std::exp(v - mx);
  return mx + std::log(total);
}

/// -log softmax(logits)[target] for a single row of logits.
inline Tensor cross_entropy_with_logits(Tape& tape, const Tensor& logits, std::size_t target) {
  if (logits.rows() != 1 || logits.cols() == 0) {
    throw DimensionError("cross_entropy_with_logits: expects a non-empty single row");
  }
  if (target >= logits.cols()) throw IndexError("cross_entropy_with_logits: target out of range");
  const double value = log_sum_exp(logits.values()) - logits(0, target);
  const bool track = tape.tracks(logits);
  Tensor out(Shape{1, 1}, {value}, track);
  if (track) {
    tape.record("cross_entropy_with_logits", {logits}, out, [logits, out, target] {
      const double g = out.grad()[0];
      const auto p = softmax(logits.values());
      auto lg = logits.grad();
      for (std::size_t i = 0; i < p.size(); ++i) lg[i] += g * (p[i] - (i == target ? 1.0 : 0.0));
    });
  }
  return out;
}

}  // namespace radialrouter::num
