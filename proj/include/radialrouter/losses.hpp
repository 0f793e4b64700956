#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "radialrouter/numcore.hpp"

namespace radialrouter::loss {

using num::Tape;
using num::Tensor;

/// Objective supervising LLM selection.
enum class SelectionLoss { kl, ce, ql };

inline std::string to_string(SelectionLoss l) {
  switch (l) {
    case SelectionLoss::kl: return "kl";
    case SelectionLoss::ce: return "ce";
    case SelectionLoss::ql: return "ql";
  }
  return "?";
}

inline SelectionLoss selection_loss_from_string(const std::string& s) {
  if (s == "kl") return SelectionLoss::kl;
  if (s == "ce") return SelectionLoss::ce;
  if (s == "ql") return SelectionLoss::ql;
  throw ConfigError("unknown selection loss '" + s + "' (expected kl, ce or ql)");
}

struct LossConfig {
  double lambda = 0.5;        // weight of the query-query contrastive term
  std::size_t negatives = 4;  // out-group queries per anchor (H)
  std::size_t top_k = 3;      // K for the query-LLM contrastive loss
  SelectionLoss selection = SelectionLoss::kl;
  bool ql_on_logits = false;  // feed scores instead of probabilities to the ql loss

  void validate(std::size_t n_llms) const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("loss: lambda must be >= 0");
    if (negatives < 1) throw ConfigError("loss: need at least one out-group negative");
    if (selection == SelectionLoss::ql && (top_k < 1 || 2 * top_k > n_llms)) {
      throw ConfigError("loss: ql needs 1 <= K and 2K <= n (K=" + std::to_string(top_k) +
                        ", n=" + std::to_string(n_llms) + ")");
    }
  }
};

/// Floor applied to target probabilities before taking logs.
inline constexpr double kTargetFloor = 1e-12;

inline void validate_distribution(std::span<const double> p, const char* what) {
  if (p.empty()) throw ValidationError(std::string(what) + ": empty distribution");
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(std::string(what) + ": negative or non-finite entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw ValidationError(std::string(what) + ": entries sum to " + std::to_string(total));
  }
}

/// D_KL(p || q) = sum_i p_i log(p_i / q_i), natural log, q floored at 1e-12.
inline double kl_loss(std::span<const double> p, std::span<const double> q) {
  validate_distribution(p, "kl_loss p");
  validate_distribution(q, "kl_loss q");
  if (p.size() != q.size()) throw DimensionError("kl_loss: length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) total += p[i] * std::log(p[i] / std::max(q[i], kTargetFloor));
  }
  return total;
}

/// KL of the predicted distribution (a 1 x n tensor) against a fixed target.
inline Tensor kl_loss(Tape& tape, const Tensor& p, std::span<const double> q) {
  if (p.rows() != 1 || p.cols() != q.size()) throw DimensionError("kl_loss: shape mismatch");
  const double value = kl_loss(p.values(), q);
  const bool track = tape.tracks(p);
  Tensor out(num::Shape{1, 1}, {value}, track);
  if (track) {
    std::vector<double> target(q.begin(), q.end());
    tape.record("kl_loss", {p}, out, [p, out, target = std::move(target)] {
      const double g = out.grad()[0];
      auto pv = p.values();
      auto pg = p.grad();
      for (std::size_t i = 0; i < pv.size(); ++i) {
        const double pi = std::max(pv[i], 1e-300);
        pg[i] += g * (std::log(pi / std::max(target[i], kTargetFloor)) + 1.0);
      }
    });
  }
  return out;
}

/// -log(e^{sim(a,x+)} / (e^{sim(a,x+)} + sum_t e^{sim(a,x_t-)})), cosine sim.
inline double qq_contrastive_loss(std::span<const double> anchor, std::span<const double> positive,
                                  std::span<const std::vector<double>> negatives) {
  if (negatives.empty()) throw ConfigError("qq_contrastive_loss: need at least one negative");
  std::vector<double> sims{num::cosine(anchor, positive)};
  for (const auto& n : negatives) sims.push_back(num::cosine(anchor, n));
  return num::log_sum_exp(sims) - sims[0];
}

inline Tensor qq_contrastive_loss(Tape& tape, const Tensor& anchor, const Tensor& positive,
                                  std::span<const Tensor> negatives) {
  if (negatives.empty()) throw ConfigError("qq_contrastive_loss: need at least one negative");
  std::vector<Tensor> sims{num::cosine_similarity(tape, anchor, positive)};
  for (const auto& n : negatives) sims.push_back(num::cosine_similarity(tape, anchor, n));
  return num::cross_entropy_with_logits(tape, num::concat_cols(tape, sims), 0);
}

inline double combined_objective(double kl, double qq, double lambda) { return kl + lambda * qq; }

inline Tensor combined_objective(Tape& tape, const Tensor& kl, const Tensor& qq, double lambda) {
  if (!qq.defined()) return kl;
  return num::add(tape, kl, num::scale(tape, qq, lambda));
}

/// Lowest index among the maxima.
inline std::size_t argmax_lowest(std::span<const double> v) {
  if (v.empty()) throw ConfigError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

/// One-hot label for cross-entropy: the highest true score (ties -> lowest index).
inline std::size_t ce_label(std::span<const double> true_scores) { return argmax_lowest(true_scores); }

/// -log p_label.
inline double ce_loss(std::span<const double> p, std::size_t label) {
  if (label >= p.size()) throw IndexError("ce_loss: label " + std::to_string(label) + " out of range");
  validate_distribution(p, "ce_loss p");
  return -std::log(std::max(p[label], 1e-300));
}

inline Tensor ce_loss(Tape& tape, const Tensor& p, std::size_t label) {
  if (p.rows() != 1) throw DimensionError("ce_loss: expects a single row");
  const double value = ce_loss(p.values(), label);
  const bool track = tape.tracks(p);
  Tensor out(num::Shape{1, 1}, {value}, track);
  if (track) {
    tape.record("ce_loss", {p}, out, [p, out, label] {
      p.grad()[label] -= out.grad()[0] / std::max(p.values()[label], 1e-300);
    });
  }
  return out;
}

struct ContrastSets {
  std::vector<std::size_t> top;
  std::vector<std::size_t> bottom;
};

/// Indices of the K highest and the K lowest true scores. Ties go to the
/// lower index; the bottom set is drawn from indices outside the top set.
inline ContrastSets top_bottom(std::span<const double> scores, std::size_t k) {
  if (k < 1 || 2 * k > scores.size()) {
    throw ConfigError("top_bottom: need 1 <= K and 2K <= n (K=" + std::to_string(k) +
                      ", n=" + std::to_string(scores.size()) + ")");
  }
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  ContrastSets sets;
  sets.top.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  std::vector<std::size_t> rest(idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end());
  std::stable_sort(rest.begin(), rest.end(), [&](auto a, auto b) {
    return scores[a] < scores[b] || (scores[a] == scores[b] && a < b);
  });
  sets.bottom.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(k));
  return sets;
}

/// sum_{i in top} -log(e^{p_i} / (e^{p_i} + sum_{j in bottom} e^{p_j})).
/// The exponentials take the routing probabilities themselves as arguments.
inline double ql_contrastive_loss(std::span<const double> p, std::span<const double> true_scores,
                                  std::size_t k) {
  if (p.size() != true_scores.size()) throw DimensionError("ql_contrastive_loss: length mismatch");
  const auto sets = top_bottom(true_scores, k);
  double total = 0.0;
  for (auto i : sets.top) {
    std::vector<double> logits{p[i]};
    for (auto j : sets.bottom) logits.push_back(p[j]);
    total += num::log_sum_exp(logits) - p[i];
  }
  return total;
}

inline Tensor ql_contrastive_loss(Tape& tape, const Tensor& p, std::span<const double> true_scores,
                                  std::size_t k) {
  if (p.rows() != 1 || p.cols() != true_scores.size()) {
    throw DimensionError("ql_contrastive_loss: shape mismatch");
  }
  const auto sets = top_bottom(true_scores, k);
  std::vector<Tensor> terms;
  for (auto i : sets.top) {
    std::vector<std::size_t> cols{i};
    cols.insert(cols.end(), sets.bottom.begin(), sets.bottom.end());
    terms.push_back(num::cross_entropy_with_logits(tape, num::gather_cols(tape, p, cols), 0));
  }
  return num::add_scalars(tape, terms);
}

}  // namespace radialrouter::loss
