#pragma once

// Shields Eigen from the _res macro of <resolv.h>.
#pragma push_macro("_res")
#undef _res
#include <Eigen/Dense>
#pragma pop_macro("_res")

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "radialrouter/data.hpp"
#include "radialrouter/util.hpp"

namespace radialrouter::cluster {

using nlohmann::json;

/// Dense row-major point set.
struct Points {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Points() = default;
  Points(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

/// Projects centred rows onto their top `k` principal axes.
inline Points pca_reduce(const Points& x, std::size_t k) {
  if (k >= x.cols) return x;
  Eigen::MatrixXd m(x.rows, x.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.cols; ++j) m(i, j) = x.values[i * x.cols + j];
  }
  m.rowwise() -= m.colwise().mean();
  const Eigen::MatrixXd cov = (m.transpose() * m) / std::max<double>(1.0, static_cast<double>(x.rows) - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // Eigenvalues ascend; take the last k columns, largest first.
  Eigen::MatrixXd basis(x.cols, k);
  for (std::size_t j = 0; j < k; ++j) {
    Eigen::VectorXd axis = eig.eigenvectors().col(static_cast<Eigen::Index>(x.cols - 1 - j));
    // Fix the sign so the projection is reproducible.
    Eigen::Index pivot;
    axis.cwiseAbs().maxCoeff(&pivot);
    if (axis(pivot) < 0) axis = -axis;
    basis.col(static_cast<Eigen::Index>(j)) = axis;
  }
  const Eigen::MatrixXd proj = m * basis;
  Points out(x.rows, k);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < k; ++j) out.values[i * k + j] = proj(i, j);
  }
  return out;
}

struct TsneConfig {
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  std::size_t out_dim = 2;
  std::uint64_t seed = 0;
  double early_exaggeration = 12.0;
  std::size_t exaggeration_iters = 250;
  std::size_t pca_dim = 50;  // pre-reduction when inputs are wider
};

/// Largest admissible perplexity for m points.
inline double clamp_perplexity(double perplexity, std::size_t m) {
  const double limit = (static_cast<double>(m) - 1.0) / 3.0;
  if (perplexity < limit) return perplexity;
  const double clamped = std::nextafter(limit, 0.0);
  spdlog::warn("t-SNE perplexity {} too large for {} points, clamped to {:.4f}", perplexity, m, clamped);
  return clamped;
}

namespace detail {

/// Conditional affinities P_{j|i} with the bandwidth found by bisection so
/// that the row entropy equals log(perplexity).
inline std::vector<double> conditional_affinities(const std::vector<double>& d2, std::size_t m,
                                                  double perplexity) {
  std::vector<double> p(m * m, 0.0);
  const double target = std::log(perplexity);
  for (std::size_t i = 0; i < m; ++i) {
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    const double* row = d2.data() + i * m;
    double* out = p.data() + i * m;
    // Shift by the nearest neighbour distance so exp() never underflows to all-zero.
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) dmin = std::min(dmin, row[j]);
    }
    for (int it = 0; it < 200; ++it) {
      double sum = 0.0, weighted = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        out[j] = j == i ? 0.0 : std::exp(-beta * (row[j] - dmin));
        sum += out[j];
        weighted += out[j] * (row[j] - dmin);
      }
      const double entropy = std::log(sum) + beta * weighted / sum;
      for (std::size_t j = 0; j < m; ++j) out[j] /= sum;
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-5) break;
      if (diff > 0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
  }
  return p;
}

}  // namespace detail

/// Exact t-SNE. Rows that coincide with an earlier row are jittered by
/// 1e-8 noise first.
inline Points tsne_project(Points x, const TsneConfig& cfg) {
  const std::size_t m = x.rows;
  if (m < 4) throw ConfigError("t-SNE needs at least 4 points, got " + std::to_string(m));
  if (cfg.out_dim < 1) throw ConfigError("t-SNE output dimension must be positive");
  if (!(cfg.perplexity > 0.0)) throw ConfigError("t-SNE perplexity must be positive");
  if (x.cols > cfg.pca_dim) x = pca_reduce(x, cfg.pca_dim);
  const double perplexity = clamp_perplexity(cfg.perplexity, m);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 1; i < m; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (squared_distance(x.row(i), x.row(j)) == 0.0) {
        for (auto& v : x.row(i)) v += 1e-8 * normal(rng);
        break;
      }
    }
  }

  std::vector<double> d2(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) d2[i * m + j] = d2[j * m + i] = squared_distance(x.row(i), x.row(j));
  }
  const auto cond = detail::conditional_affinities(d2, m, perplexity);
  std::vector<double> p(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      p[i * m + j] = std::max((cond[i * m + j] + cond[j * m + i]) / (2.0 * static_cast<double>(m)), 1e-12);
    }
  }

  const std::size_t k = cfg.out_dim;
  Points y(m, k);
  for (auto& v : y.values) v = 1e-4 * normal(rng);
  std::vector<double> velocity(m * k, 0.0), gains(m * k, 1.0), grad(m * k), num(m * m);
  const double lr = std::max(static_cast<double>(m) / cfg.early_exaggeration / 4.0, 50.0);

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const double exaggeration = it < cfg.exaggeration_iters ? cfg.early_exaggeration : 1.0;
    const double momentum = it < cfg.exaggeration_iters ? 0.5 : 0.8;
    double z = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      num[i * m + i] = 0.0;
      for (std::size_t j = i + 1; j < m; ++j) {
        const double q = 1.0 / (1.0 + squared_distance(y.row(i), y.row(j)));
        num[i * m + j] = num[j * m + i] = q;
        z += 2.0 * q;
      }
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (i == j) continue;
        const double q = num[i * m + j];
        const double coeff = 4.0 * (exaggeration * p[i * m + j] - std::max(q / z, 1e-12)) * q;
        for (std::size_t c = 0; c < k; ++c) grad[i * k + c] += coeff * (y.values[i * k + c] - y.values[j * k + c]);
      }
    }
    for (std::size_t a = 0; a < m * k; ++a) {
      const bool same_sign = (grad[a] > 0) == (velocity[a] > 0);
      gains[a] = std::max(same_sign ? gains[a] * 0.8 : gains[a] + 0.2, 0.01);
      velocity[a] = momentum * velocity[a] - lr * gains[a] * grad[a];
      y.values[a] += velocity[a];
    }
    for (std::size_t c = 0; c < k; ++c) {
      double mean = 0.0;
      for (std::size_t i = 0; i < m; ++i) mean += y.values[i * k + c];
      mean /= static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i) y.values[i * k + c] -= mean;
    }
  }
  return y;
}

struct KMeansResult {
  std::vector<std::size_t> assignment;  // 0-based cluster per point
  Points centroids;
  double inertia = 0.0;
  std::vector<double> inertia_history;  // after each assignment step
  std::size_t iterations = 0;
};

inline double inertia_of(const Points& x, const Points& centroids, std::span<const std::size_t> assignment) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) s += squared_distance(x.row(i), centroids.row(assignment[i]));
  return s;
}

/// Lloyd's algorithm with k-means++ seeding. An empty cluster is re-seeded
/// to the point farthest from its current centroid.
inline KMeansResult kmeans(const Points& x, std::size_t n_clusters, std::uint64_t seed, std::size_t max_iter = 300) {
  const std::size_t m = x.rows;
  if (n_clusters < 1) throw ConfigError("k-means needs at least one cluster");
  if (n_clusters > m) {
    throw ConfigError("k-means: " + std::to_string(n_clusters) + " clusters requested for " + std::to_string(m) +
                      " points");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  KMeansResult r;
  r.centroids = Points(n_clusters, x.cols);

  std::vector<bool> chosen(m, false);
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, m - 1)(rng);
  std::copy_n(x.row(first).begin(), x.cols, r.centroids.row(0).begin());
  chosen[first] = true;
  std::vector<double> nearest(m);
  for (std::size_t i = 0; i < m; ++i) nearest[i] = squared_distance(x.row(i), x.row(first));
  for (std::size_t c = 1; c < n_clusters; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) total += chosen[i] ? 0.0 : nearest[i];
    std::size_t pick = m;
    if (total > 0.0) {
      double u = unit(rng) * total;
      for (std::size_t i = 0; i < m; ++i) {
        if (chosen[i] || nearest[i] <= 0.0) continue;
        pick = i;
        u -= nearest[i];
        if (u <= 0.0) break;
      }
    }
    if (pick == m) pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
    chosen[pick] = true;
    std::copy_n(x.row(pick).begin(), x.cols, r.centroids.row(c).begin());
    for (std::size_t i = 0; i < m; ++i) nearest[i] = std::min(nearest[i], squared_distance(x.row(i), x.row(pick)));
  }

  r.assignment.assign(m, 0);
  std::vector<std::size_t> previous;
  for (std::size_t it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < m; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < n_clusters; ++c) {
        const double d = squared_distance(x.row(i), r.centroids.row(c));
        if (d < best) {
          best = d;
          r.assignment[i] = c;
        }
      }
    }
    const double inertia = inertia_of(x, r.centroids, r.assignment);
    if (!r.inertia_history.empty() && inertia > r.inertia_history.back() * (1.0 + 1e-12) + 1e-12) {
      throw NumericError("k-means inertia increased between iterations");
    }
    r.inertia_history.push_back(inertia);
    r.iterations = it + 1;
    if (r.assignment == previous) break;
    previous = r.assignment;

    Points sums(n_clusters, x.cols);
    std::vector<std::size_t> counts(n_clusters, 0);
    for (std::size_t i = 0; i < m; ++i) {
      auto dst = sums.row(r.assignment[i]);
      const auto src = x.row(i);
      for (std::size_t k = 0; k < x.cols; ++k) dst[k] += src[k];
      ++counts[r.assignment[i]];
    }
    for (std::size_t c = 0; c < n_clusters; ++c) {
      if (counts[c] == 0) continue;
      auto dst = r.centroids.row(c);
      const auto src = sums.row(c);
      for (std::size_t k = 0; k < x.cols; ++k) dst[k] = src[k] / static_cast<double>(counts[c]);
    }
    for (std::size_t c = 0; c < n_clusters; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < m; ++i) {
        if (counts[r.assignment[i]] <= 1) continue;
        const double d = squared_distance(x.row(i), r.centroids.row(r.assignment[i]));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      spdlog::debug("k-means: cluster {} empty, re-seeded at point {}", c, far);
      --counts[r.assignment[far]];
      ++counts[c];
      r.assignment[far] = c;
      std::copy_n(x.row(far).begin(), x.cols, r.centroids.row(c).begin());
    }
  }
  r.inertia = inertia_of(x, r.centroids, r.assignment);
  return r;
}

struct ClusterConfig {
  std::size_t n_groups = 6;
  TsneConfig tsne;
  std::size_t max_iter = 300;
  std::uint64_t seed = 0;

  json to_json() const {
    return {{"n_groups", n_groups},         {"perplexity", tsne.perplexity}, {"tsne_iterations", tsne.iterations},
            {"projection_dim", tsne.out_dim}, {"kmeans_max_iter", max_iter},   {"seed", seed}};
  }

  static ClusterConfig from_json(const json& j) {
    ClusterConfig c;
    c.n_groups = j.value("n_groups", c.n_groups);
    c.tsne.perplexity = j.value("perplexity", c.tsne.perplexity);
    c.tsne.iterations = j.value("tsne_iterations", c.tsne.iterations);
    c.tsne.out_dim = j.value("projection_dim", c.tsne.out_dim);
    c.max_iter = j.value("kmeans_max_iter", c.max_iter);
    c.seed = j.value("seed", c.seed);
    return c;
  }
};

/// Query id -> semantic group (0-based here, 1-based in the groups file).
struct SemanticGroups {
  std::map<std::string, std::size_t> assignment;
  std::map<std::string, std::vector<double>> coordinates;
  Points centroids;
  std::size_t n_groups = 0;
  std::size_t projection_dim = 2;
  double perplexity = 0.0;
  std::uint64_t seed = 0;

  std::optional<std::size_t> group_of(const std::string& id) const {
    const auto it = assignment.find(id);
    if (it == assignment.end()) return std::nullopt;
    return it->second;
  }

  std::string hash() const {
    Fnv1a h;
    for (const auto& [id, g] : assignment) {
      h.update(id);
      h.update(static_cast<double>(g));
    }
    return h.hex();
  }

  json to_json() const {
    json a = json::object(), coords = json::object(), cents = json::array();
    for (const auto& [id, g] : assignment) a[id] = g + 1;
    for (const auto& [id, c] : coordinates) coords[id] = c;
    for (std::size_t c = 0; c < centroids.rows; ++c) {
      const auto r = centroids.row(c);
      cents.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return {{"n_groups", n_groups},   {"projection_dim", projection_dim}, {"perplexity", perplexity},
            {"seed", seed},           {"assignment_hash", hash()},         {"assignment", a},
            {"centroids", cents},     {"coordinates", coords}};
  }

  static SemanticGroups from_json(const json& j) {
    SemanticGroups g;
    try {
      g.n_groups = j.at("n_groups").get<std::size_t>();
      g.projection_dim = j.value("projection_dim", std::size_t{2});
      g.perplexity = j.value("perplexity", 0.0);
      g.seed = j.value("seed", std::uint64_t{0});
      for (const auto& [id, v] : j.at("assignment").items()) {
        const auto gid = v.get<std::size_t>();
        if (gid < 1 || gid > g.n_groups) {
          throw FormatError("groups file: query " + id + " has group " + std::to_string(gid) + " outside [1, " +
                            std::to_string(g.n_groups) + "]");
        }
        g.assignment[id] = gid - 1;
      }
      if (j.contains("coordinates")) {
        for (const auto& [id, v] : j.at("coordinates").items()) g.coordinates[id] = v.get<std::vector<double>>();
      }
      if (j.contains("centroids")) {
        const auto rows = j.at("centroids").get<std::vector<std::vector<double>>>();
        g.centroids = Points(rows.size(), rows.empty() ? 0 : rows[0].size());
        for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), g.centroids.row(r).begin());
      }
    } catch (const json::exception& e) {
      throw FormatError(std::string("groups file: ") + e.what());
    }
    if (j.contains("assignment_hash") && j.at("assignment_hash").get<std::string>() != g.hash()) {
      throw FormatError("groups file: assignment hash mismatch");
    }
    return g;
  }
};

inline void save_groups(const std::filesystem::path& path, const SemanticGroups& g) {
  write_file_atomic(path, g.to_json().dump(2) + "\n");
}

inline SemanticGroups load_groups(const std::filesystem::path& path) {
  try {
    return SemanticGroups::from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw FormatError("groups file " + path.string() + ": " + e.what());
  }
}

/// t-SNE then k-means over the embeddings of the selected queries.
inline SemanticGroups cluster_queries(const data::Corpus& corpus, std::span<const std::size_t> query_indices,
                                      const ClusterConfig& cfg) {
  const std::size_t m = query_indices.size();
  if (cfg.n_groups > m) {
    throw ConfigError("cluster: " + std::to_string(cfg.n_groups) + " groups requested for " + std::to_string(m) +
                      " queries");
  }
  Points x(m, corpus.embeddings.dim());
  for (std::size_t i = 0; i < m; ++i) {
    const auto e = corpus.embedding(corpus.queries.at(query_indices[i]));
    std::copy(e.begin(), e.end(), x.row(i).begin());
  }
  TsneConfig tc = cfg.tsne;
  tc.seed = cfg.seed;
  const Points y = tsne_project(std::move(x), tc);
  const auto km = kmeans(y, cfg.n_groups, cfg.seed, cfg.max_iter);
  SemanticGroups g;
  g.n_groups = cfg.n_groups;
  g.projection_dim = tc.out_dim;
  g.perplexity = clamp_perplexity(tc.perplexity, m);
  g.seed = cfg.seed;
  g.centroids = km.centroids;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& id = corpus.queries[query_indices[i]].id;
    g.assignment[id] = km.assignment[i];
    const auto r = y.row(i);
    g.coordinates[id] = std::vector<double>(r.begin(), r.end());
  }
  return g;
}

/// Fraction of points whose cluster's majority label matches their own label.
inline double purity(std::span<const std::size_t> clusters, std::span<const std::size_t> labels) {
  if (clusters.size() != labels.size()) throw DimensionError("purity: length mismatch");
  if (clusters.empty()) return 1.0;
  std::map<std::size_t, std::map<std::size_t, std::size_t>> table;
  for (std::size_t i = 0; i < clusters.size(); ++i) ++table[clusters[i]][labels[i]];
  std::size_t hits = 0;
  for (const auto& [c, counts] : table) {
    std::size_t best = 0;
    for (const auto& [l, k] : counts) best = std::max(best, k);
    hits += best;
  }
  return static_cast<double>(hits) / static_cast<double>(clusters.size());
}

struct ContrastivePair {
  std::size_t positive;
  std::vector<std::size_t> negatives;
};

/// Samples one in-group positive and up to H out-group negatives for the
/// anchor from the mini-batch (values are whatever the caller indexes with).
/// Returns nothing when the batch holds no in-group partner.
inline std::optional<ContrastivePair> sample_contrastive_pair(std::span<const std::size_t> batch,
                                                              std::span<const std::size_t> group_of,
                                                              std::size_t anchor, std::size_t h,
                                                              std::mt19937_64& rng) {
  if (std::find(batch.begin(), batch.end(), anchor) == batch.end()) {
    throw ContractError("sample_contrastive_pair: anchor not in batch");
  }
  std::vector<std::size_t> same, other;
  for (auto q : batch) {
    if (q == anchor) continue;
    (group_of[q] == group_of[anchor] ? same : other).push_back(q);
  }
  if (same.empty()) return std::nullopt;
  ContrastivePair pair;
  pair.positive = same[std::uniform_int_distribution<std::size_t>(0, same.size() - 1)(rng)];
  if (other.size() <= h) {
    pair.negatives = std::move(other);
  } else {
    for (std::size_t k = 0; k < h; ++k) {
      const auto j = std::uniform_int_distribution<std::size_t>(k, other.size() - 1)(rng);
      std::swap(other[k], other[j]);
    }
    pair.negatives.assign(other.begin(), other.begin() + static_cast<std::ptrdiff_t>(h));
  }
  return pair;
}

}  // namespace radialrouter::cluster
