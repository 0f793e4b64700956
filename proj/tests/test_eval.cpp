#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "radialrouter/eval.hpp"
#include "radialrouter/reference.hpp"

using namespace radialrouter;
namespace fs = std::filesystem;

namespace {

data::Corpus reference_corpus() {
  data::Corpus c;
  c.catalog = reference::routerbench_catalog();
  c.queries = reference::routerbench_reference_queries();
  return c;
}

data::SynthCorpus synth(std::uint64_t seed = 1) {
  data::SynthConfig sc;
  sc.queries_per_group = 20;
  sc.seed = seed;
  return data::synth_generate(sc);
}

TEST(Aggregate, MacroAveragesPerDatasetMeans) {
  data::Corpus c;
  c.catalog = data::LLMCatalog({{"a", 1.0}, {"b", 3.0}});
  c.queries = {{"1", std::nullopt, "X", {1.0, 0.0}, data::kNoRow},
               {"2", std::nullopt, "X", {0.0, 1.0}, data::kNoRow},
               {"3", std::nullopt, "X", {0.5, 0.5}, data::kNoRow},
               {"4", std::nullopt, "Y", {0.25, 1.0}, data::kNoRow}};
  const std::vector<std::size_t> idx = {0, 1, 2, 3}, choice = {0, 0, 1, 1};
  const auto m = eval::aggregate(c.catalog, c.queries, idx, choice, 0.1);
  EXPECT_DOUBLE_EQ(m.per_dataset.at("X").performance, 0.5);
  EXPECT_DOUBLE_EQ(m.per_dataset.at("X").cost, 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.macro.performance, 0.75);
  EXPECT_DOUBLE_EQ(m.macro.cost, (5.0 / 3.0 + 3.0) / 2.0);
  EXPECT_DOUBLE_EQ(m.micro.performance, 2.5 / 4.0);
  EXPECT_DOUBLE_EQ(m.macro.score, m.macro.performance - 0.1 * m.macro.cost);
  const std::vector<std::size_t> bad = {0, 0, 2, 1};
  EXPECT_THROW(eval::aggregate(c.catalog, c.queries, idx, bad, 0.1), ContractError);
}

TEST(Oracle, TiesPreferTheCheaperLlm) {
  const data::LLMCatalog cat({{"pricey", 2.0}, {"cheap", 1.0}, {"cheapest-but-worse", 0.5}});
  const data::QueryRecord q{"q", std::nullopt, "t", {1.0, 1.0, 0.5}, data::kNoRow};
  EXPECT_EQ(eval::oracle_choice(q, cat, 0.0), 1u);
  EXPECT_EQ(eval::oracle_choice(q, cat, 1.0), 2u);
}

TEST(Oracle, DominatesRandomRouters) {
  const auto s = synth();
  const auto idx = eval::all_queries(s.corpus);
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> pick(0, s.corpus.catalog.size() - 1);
  for (double alpha : {0.0, 0.02, 0.1, 1.0}) {
    const auto sc = eval::Scenario::custom(alpha);
    const double oracle = eval::baseline_oracle(s.corpus, idx, sc).macro.score;
    for (int k = 0; k < 25; ++k) {
      std::vector<std::size_t> choices(idx.size());
      for (auto& c : choices) c = pick(rng);
      const auto r = eval::report_from_choices("random", s.corpus, idx, choices, sc);
      EXPECT_LE(r.macro.score, oracle);
      EXPECT_EQ(r.oracle_score, oracle);
    }
  }
}

TEST(Oracle, EveryReportCarriesTheOracleScore) {
  data::Corpus c;
  c.catalog = data::LLMCatalog({{"a", 1.0}, {"b", 0.2}});
  c.queries = {{"1", std::nullopt, "X", {1.0, 0.0}, data::kNoRow}, {"2", std::nullopt, "Y", {0.6, 0.6}, data::kNoRow}};
  const std::vector<std::size_t> idx = {0, 1};
  const auto oracle = eval::baseline_oracle(c, idx, eval::Scenario::balance());
  EXPECT_EQ(oracle.choice_counts, (std::vector<std::size_t>{1, 1}));
  EXPECT_DOUBLE_EQ(oracle.macro.score, oracle.oracle_score);
  const auto worst = eval::constant_router(c, idx, eval::Scenario::balance(), 1);
  EXPECT_DOUBLE_EQ(worst.oracle_score, oracle.macro.score);
  EXPECT_LT(worst.macro.score, worst.oracle_score);
}

TEST(Reference, BestCandidateRows) {
  const auto c = reference_corpus();
  const auto idx = eval::all_queries(c);
  const auto pf = eval::baseline_best_candidate(c, idx, eval::Scenario::performance_first());
  const auto bal = eval::baseline_best_candidate(c, idx, eval::Scenario::balance());
  const auto cf = eval::baseline_best_candidate(c, idx, eval::Scenario::cost_first());
  EXPECT_EQ(pf.note, "gpt-4-1106-preview");
  EXPECT_EQ(bal.note, "gpt-3.5-turbo-1106");
  EXPECT_EQ(cf.note, "Yi-34B-Chat");
  EXPECT_NEAR(pf.macro.score, 0.813, 0.001);
  EXPECT_NEAR(pf.macro.cost, 7.185, 1e-12);
  EXPECT_NEAR(bal.macro.score, 0.698, 0.001);
  EXPECT_NEAR(cf.macro.score, 0.660, 0.001);
}

TEST(Reference, RandomClosedFormNearSampledRow) {
  const auto c = reference_corpus();
  const auto idx = eval::all_queries(c);
  const auto r = eval::baseline_random(c, idx, eval::Scenario::performance_first(), 50, 0);
  ASSERT_TRUE(r.expected);
  double perf = 0.0, cost = 0.0;
  for (const auto& s : reference::routerbench_stats()) {
    double mean = 0.0;
    for (double a : s.accuracy) mean += a / 6.0;
    perf += mean / 11.0;
    cost += s.cost / 11.0;
  }
  EXPECT_NEAR(r.expected->performance, perf, 1e-12);
  EXPECT_NEAR(r.expected->cost, cost, 1e-12);
  EXPECT_NEAR(r.expected->performance, 0.627, 0.01);
  EXPECT_NEAR(r.expected->cost, 1.847, 0.05);
}

TEST(Baselines, ConstantRouterMatchesLlmStats) {
  const auto s = synth();
  const auto idx = eval::all_queries(s.corpus);
  for (std::size_t i = 0; i < s.corpus.catalog.size(); ++i) {
    const auto r = eval::constant_router(s.corpus, idx, eval::Scenario::balance(), i);
    EXPECT_DOUBLE_EQ(r.macro.cost, s.corpus.catalog[i].cost);
    EXPECT_EQ(r.choice_counts[i], idx.size());
  }
}

TEST(Baselines, RandomAveragesTrialsAndIsSeeded) {
  const auto s = synth();
  const auto idx = eval::all_queries(s.corpus);
  const auto a = eval::baseline_random(s.corpus, idx, eval::Scenario::balance(), 50, 4);
  const auto b = eval::baseline_random(s.corpus, idx, eval::Scenario::balance(), 50, 4);
  EXPECT_EQ(a, b);
  EXPECT_NEAR(a.macro.performance, a.expected->performance, 0.02);
  EXPECT_THROW(eval::baseline_random(s.corpus, idx, eval::Scenario::balance(), 0), ConfigError);
}

TEST(Baselines, CosineClassifierSeparatesBlobs) {
  const auto s = synth(2);
  const auto split = train::split_dataset(s.corpus.queries, 2);
  const auto sc = eval::Scenario::balance();
  eval::CosineConfig cfg;
  cfg.epochs = 60;
  const auto clf = eval::CosineClassifier::fit(s.corpus, split.train, sc.alpha, cfg);
  const auto scores = train::precompute_scores(s.corpus.queries, s.corpus.catalog, sc.alpha);
  std::vector<std::size_t> choices, labels;
  for (auto i : split.test) {
    choices.push_back(clf.route(s.corpus.embedding(s.corpus.queries[i])));
    labels.push_back(loss::ce_label(scores[i]));
  }
  EXPECT_GE(eval::routing_accuracy(choices, labels), 0.95);
}

TEST(Experiments, SweepAndPoolGrowth) {
  const auto s = synth();
  const auto idx = eval::all_queries(s.corpus);
  const std::vector<double> alphas = {0.0, 0.05, 0.1};
  const auto rows = eval::alpha_sweep(s.corpus, idx, alphas, {});
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows[2].router, "oracle");
  for (std::size_t k = 0; k < rows.size(); k += 3) EXPECT_GE(rows[k + 2].macro.score, rows[k + 1].macro.score);

  std::vector<std::string> order;
  for (const auto& e : s.corpus.catalog.entries()) order.push_back(e.name);
  std::reverse(order.begin(), order.end());
  const auto pool = eval::pool_growth(s.corpus, idx, order, eval::Scenario::balance());
  double last = -1e300;
  for (const auto& r : pool) {
    if (r.router != "oracle") continue;
    EXPECT_GE(r.macro.score, last);
    last = r.macro.score;
  }
  const auto single = eval::constant_router(s.corpus, idx, eval::Scenario::balance(),
                                            *s.corpus.catalog.index_of(order.front()));
  EXPECT_EQ(pool[0].macro, single.macro);
  EXPECT_EQ(pool[1].macro, single.macro);
}

TEST(Reports, JsonRoundTripAndFormats) {
  const auto s = synth();
  const auto idx = eval::all_queries(s.corpus);
  std::vector<eval::EvalReport> reports = {
      eval::baseline_random(s.corpus, idx, eval::Scenario::balance()),
      eval::baseline_oracle(s.corpus, idx, eval::Scenario::cost_first())};
  EXPECT_EQ(eval::reports_from_json(eval::reports_to_json(reports)), reports);
  const auto csv = eval::table1_csv(reports);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "router,scenario,alpha,performance,cost,score");
  EXPECT_NE(csv.find("\noracle,cost_first,0.100000,"), std::string::npos);

  eval::AblationResult ab;
  ab.variant = eval::ablation_variant("with_ce");
  ab.report = reports[0];
  EXPECT_NE(eval::ablation_csv(std::span(&ab, 1)).find(",-\n"), std::string::npos);
  EXPECT_THROW(eval::ablation_variant("nope"), ConfigError);
  EXPECT_EQ(eval::ablation_variants().size(), 7u);

  const auto dir = fs::temp_directory_path() / "rr_emit_test";
  fs::remove_all(dir);
  eval::ReportBundle b;
  b.reports = reports;
  const auto written = eval::emit_report(dir, b);
  ASSERT_EQ(written.size(), 2u);
  EXPECT_TRUE(fs::exists(dir / "table1.csv"));
  EXPECT_FALSE(fs::exists(dir / "fig5.tsv"));
  fs::remove_all(dir);
}

TEST(Scenarios, NamedValues) {
  EXPECT_EQ(eval::scenario_from_string("balance").alpha, 0.02);
  EXPECT_EQ(eval::scenario_from_string("cost_first").alpha, 0.1);
  EXPECT_THROW(eval::scenario_from_string("greedy"), ConfigError);
  EXPECT_THROW(eval::Scenario::custom(-0.1), ConfigError);
}

}  // namespace
