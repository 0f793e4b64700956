#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>

#include "radialrouter/clustering.hpp"
#include "radialrouter/data.hpp"

using namespace radialrouter;
using cluster::Points;

namespace {

Points blobs(std::size_t per, std::size_t dim, const std::vector<std::vector<double>>& centres, double spread,
             std::uint64_t seed, std::vector<std::size_t>* labels = nullptr) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, spread);
  Points x(per * centres.size(), dim);
  for (std::size_t c = 0; c < centres.size(); ++c) {
    for (std::size_t k = 0; k < per; ++k) {
      auto r = x.row(c * per + k);
      for (std::size_t j = 0; j < dim; ++j) r[j] = centres[c][j] + normal(rng);
      if (labels) labels->push_back(c);
    }
  }
  return x;
}

TEST(KMeans, TwoPairsHaveKnownCentroidsAndInertia) {
  Points x(4, 1);
  x.values = {0.0, 1.0, 10.0, 11.0};
  const auto r = cluster::kmeans(x, 2, 0);
  EXPECT_NEAR(r.inertia, 1.0, 1e-12);
  EXPECT_EQ(r.assignment[0], r.assignment[1]);
  EXPECT_EQ(r.assignment[2], r.assignment[3]);
  EXPECT_NE(r.assignment[0], r.assignment[2]);
  std::multiset<double> cents = {r.centroids.values[0], r.centroids.values[1]};
  EXPECT_EQ(cents, (std::multiset<double>{0.5, 10.5}));
}

TEST(KMeans, SeparatedBlobsArePure) {
  std::vector<std::size_t> labels;
  const auto x = blobs(30, 3, {{0, 0, 0}, {10, 0, 0}, {0, 10, 0}, {0, 0, 10}}, 0.5, 3, &labels);
  const auto r = cluster::kmeans(x, 4, 1);
  EXPECT_DOUBLE_EQ(cluster::purity(r.assignment, labels), 1.0);
}

TEST(KMeans, InertiaNeverIncreases) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = blobs(25, 2, {{0, 0}, {1, 1}, {2, 0}}, 0.8, seed);
    const auto r = cluster::kmeans(x, 5, seed);
    for (std::size_t k = 1; k < r.inertia_history.size(); ++k) {
      EXPECT_LE(r.inertia_history[k], r.inertia_history[k - 1] * (1 + 1e-12));
    }
  }
}

TEST(KMeans, AsManyClustersAsPointsGivesZeroInertia) {
  const auto x = blobs(3, 2, {{0, 0}, {5, 5}}, 1.0, 9);
  const auto r = cluster::kmeans(x, x.rows, 4);
  EXPECT_NEAR(r.inertia, 0.0, 1e-20);
  EXPECT_EQ(std::set<std::size_t>(r.assignment.begin(), r.assignment.end()).size(), x.rows);
}

TEST(KMeans, TooManyClustersRejected) {
  EXPECT_THROW(cluster::kmeans(Points(3, 2), 4, 0), ConfigError);
  EXPECT_THROW(cluster::kmeans(Points(3, 2), 0, 0), ConfigError);
}

TEST(KMeans, DuplicatePointsStillFillEveryCluster) {
  Points x(6, 1);
  x.values = {1, 1, 1, 1, 2, 3};
  const auto r = cluster::kmeans(x, 3, 0);
  EXPECT_EQ(std::set<std::size_t>(r.assignment.begin(), r.assignment.end()).size(), 3u);
}

TEST(Affinities, RowEntropyMatchesPerplexity) {
  const auto x = blobs(20, 4, {{0, 0, 0, 0}, {3, 3, 3, 3}}, 1.0, 5);
  const std::size_t m = x.rows;
  std::vector<double> d2(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) d2[i * m + j] = cluster::squared_distance(x.row(i), x.row(j));
  }
  for (double perp : {3.0, 8.0, 12.0}) {
    const auto p = cluster::detail::conditional_affinities(d2, m, perp);
    for (std::size_t i = 0; i < m; ++i) {
      double sum = 0.0, h = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double v = p[i * m + j];
        sum += v;
        if (v > 0) h -= v * std::log(v);
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
      EXPECT_EQ(p[i * m + i], 0.0);
      EXPECT_NEAR(h, std::log(perp), 1e-4);
    }
  }
}

TEST(Tsne, PreservesBlobStructure) {
  std::vector<std::size_t> labels;
  const auto x = blobs(20, 10, {std::vector<double>(10, 0.0), std::vector<double>(10, 4.0),
                                {4, -4, 4, -4, 4, -4, 4, -4, 4, -4}},
                       1.0, 11, &labels);
  cluster::TsneConfig cfg;
  cfg.perplexity = 10;
  cfg.iterations = 500;
  const auto y = cluster::tsne_project(x, cfg);
  EXPECT_EQ(y.rows, x.rows);
  EXPECT_EQ(y.cols, 2u);
  const auto r = cluster::kmeans(y, 3, 0);
  EXPECT_GE(cluster::purity(r.assignment, labels), 0.95);
  for (double v : y.values) EXPECT_TRUE(std::isfinite(v));
}

TEST(Tsne, SeededRunsAreIdenticalAndOutputIsCentred) {
  const auto x = blobs(10, 3, {{0, 0, 0}, {5, 5, 5}}, 1.0, 2);
  cluster::TsneConfig cfg;
  cfg.perplexity = 5;
  cfg.iterations = 200;
  const auto a = cluster::tsne_project(x, cfg), b = cluster::tsne_project(x, cfg);
  EXPECT_EQ(a.values, b.values);
  for (std::size_t k = 0; k < 2; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i) mean += a.row(i)[k];
    EXPECT_NEAR(mean / double(a.rows), 0.0, 1e-9);
  }
}

TEST(Tsne, ToleratesDuplicatesAndRejectsTinyInputs) {
  Points x(6, 2);
  x.values = {1, 1, 1, 1, 1, 1, 5, 5, 5, 5, 9, 9};
  cluster::TsneConfig cfg;
  cfg.iterations = 100;
  const auto y = cluster::tsne_project(x, cfg);
  for (double v : y.values) EXPECT_TRUE(std::isfinite(v));
  EXPECT_THROW(cluster::tsne_project(Points(3, 2), cfg), ConfigError);
}

TEST(Tsne, PerplexityIsClampedForSmallSets) {
  EXPECT_LT(cluster::clamp_perplexity(30.0, 10), 3.0);
  EXPECT_DOUBLE_EQ(cluster::clamp_perplexity(5.0, 100), 5.0);
}

TEST(Pca, KeepsDistancesOfPlanarData) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  // Rows span a 2-plane embedded in R^5.
  const std::vector<double> u = {1, 2, 0, -1, 0.5}, v = {0, 1, 1, 1, -2};
  Points x(15, 5);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double a = normal(rng), b = normal(rng);
    for (std::size_t k = 0; k < 5; ++k) x.row(i)[k] = 3.0 + a * u[k] + b * v[k];
  }
  const auto y = cluster::pca_reduce(x, 2);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      EXPECT_NEAR(cluster::squared_distance(x.row(i), x.row(j)), cluster::squared_distance(y.row(i), y.row(j)), 1e-9);
    }
  }
}

TEST(Purity, Definition) {
  const std::vector<std::size_t> c = {0, 0, 0, 1, 1, 2}, l = {5, 5, 6, 7, 7, 7};
  EXPECT_NEAR(cluster::purity(c, l), 5.0 / 6.0, 1e-15);
  EXPECT_THROW(cluster::purity(c, std::vector<std::size_t>{1}), DimensionError);
}

TEST(ClusterQueries, RecoversSyntheticGroups) {
  data::SynthConfig sc;
  sc.queries_per_group = 20;
  const auto syn = data::synth_generate(sc);
  const auto idx = [&] {
    std::vector<std::size_t> v(syn.corpus.queries.size());
    std::iota(v.begin(), v.end(), 0);
    return v;
  }();
  cluster::ClusterConfig cfg;
  cfg.tsne.iterations = 500;
  const auto g = cluster::cluster_queries(syn.corpus, idx, cfg);
  std::vector<std::size_t> found, truth;
  for (const auto& q : syn.corpus.queries) {
    found.push_back(*g.group_of(q.id));
    truth.push_back(syn.group_of.at(q.id));
  }
  EXPECT_GE(cluster::purity(found, truth), 0.95);
  EXPECT_EQ(g.n_groups, 6u);
  EXPECT_THROW(cluster::cluster_queries(syn.corpus, std::span<const std::size_t>(idx.data(), 5), cfg), ConfigError);
}

TEST(SemanticGroups, JsonRoundTripIsOneBasedAndHashed) {
  cluster::SemanticGroups g;
  g.n_groups = 3;
  g.assignment = {{"a", 0}, {"b", 2}, {"c", 1}};
  g.coordinates = {{"a", {0.1, 0.2}}};
  const auto j = g.to_json();
  EXPECT_EQ(j.at("assignment").at("a"), 1);
  EXPECT_EQ(j.at("assignment").at("b"), 3);
  const auto back = cluster::SemanticGroups::from_json(j);
  EXPECT_EQ(back.assignment, g.assignment);
  EXPECT_EQ(back.hash(), g.hash());

  auto bad = j;
  bad["assignment"]["b"] = 4;
  EXPECT_THROW(cluster::SemanticGroups::from_json(bad), FormatError);
  auto tampered = j;
  tampered["assignment"]["b"] = 2;
  EXPECT_THROW(cluster::SemanticGroups::from_json(tampered), FormatError);
}

TEST(SemanticGroups, SaveLoad) {
  const auto path = std::filesystem::temp_directory_path() / "rr_groups_test.json";
  cluster::SemanticGroups g;
  g.n_groups = 2;
  g.assignment = {{"x", 0}, {"y", 1}};
  cluster::save_groups(path, g);
  EXPECT_EQ(cluster::load_groups(path).assignment, g.assignment);
  std::filesystem::remove(path);
}

TEST(ContrastivePairs, SamplesInGroupPositiveAndOutGroupNegatives) {
  const std::vector<std::size_t> batch = {0, 1, 2, 3, 4, 5, 6, 7};
  const std::vector<std::size_t> group = {0, 0, 0, 1, 1, 2, 2, 2};
  std::mt19937_64 rng(1);
  for (int k = 0; k < 200; ++k) {
    const auto p = cluster::sample_contrastive_pair(batch, group, 0, 3, rng);
    ASSERT_TRUE(p);
    EXPECT_NE(p->positive, 0u);
    EXPECT_EQ(group[p->positive], 0u);
    EXPECT_EQ(p->negatives.size(), 3u);
    EXPECT_EQ(std::set<std::size_t>(p->negatives.begin(), p->negatives.end()).size(), 3u);
    for (auto n : p->negatives) EXPECT_NE(group[n], 0u);
  }
}

TEST(ContrastivePairs, FewerNegativesThanRequestedUsesAll) {
  const std::vector<std::size_t> batch = {0, 1, 2};
  const std::vector<std::size_t> group = {0, 0, 1};
  std::mt19937_64 rng(2);
  const auto p = cluster::sample_contrastive_pair(batch, group, 1, 4, rng);
  ASSERT_TRUE(p);
  EXPECT_EQ(p->negatives, (std::vector<std::size_t>{2}));
}

TEST(ContrastivePairs, NoPartnerGivesNothing) {
  const std::vector<std::size_t> batch = {0, 1, 2};
  const std::vector<std::size_t> group = {0, 1, 2};
  std::mt19937_64 rng(3);
  EXPECT_FALSE(cluster::sample_contrastive_pair(batch, group, 0, 2, rng));
  EXPECT_THROW(cluster::sample_contrastive_pair(batch, group, 7, 2, rng), ContractError);
}

TEST(ContrastivePairs, PositiveAndNegativesAreUniform) {
  const std::vector<std::size_t> batch = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  const std::vector<std::size_t> group = {0, 0, 0, 0, 0, 1, 1, 2, 2};
  std::mt19937_64 rng(99);
  std::vector<double> pos(9, 0.0), neg(9, 0.0);
  const int draws = 8000;
  for (int k = 0; k < draws; ++k) {
    const auto p = cluster::sample_contrastive_pair(batch, group, 0, 2, rng);
    pos[p->positive] += 1;
    for (auto n : p->negatives) neg[n] += 1;
  }
  // Chi-square, 3 degrees of freedom each; 16.27 is the 0.001 critical value.
  double chi_pos = 0.0, chi_neg = 0.0;
  for (std::size_t i = 1; i <= 4; ++i) chi_pos += std::pow(pos[i] - draws / 4.0, 2) / (draws / 4.0);
  for (std::size_t i = 5; i <= 8; ++i) chi_neg += std::pow(neg[i] - draws / 2.0, 2) / (draws / 2.0);
  EXPECT_LT(chi_pos, 16.27);
  EXPECT_LT(chi_neg, 16.27);
}

}  // namespace
