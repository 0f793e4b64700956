// Trains a router on the synthetic benchmark and compares it with the baselines.

#include <cstdio>

#include "radialrouter/eval.hpp"

using namespace radialrouter;

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::stoull(argv[1]) : 1;
  spdlog::set_level(spdlog::level::warn);

  data::SynthConfig sc;
  sc.seed = seed;
  const auto syn = data::synth_generate(sc);
  const auto& corpus = syn.corpus;
  const auto split = train::split_dataset(corpus.queries, seed);

  cluster::ClusterConfig cc;
  cc.seed = seed;
  const auto groups = cluster::cluster_queries(corpus, split.train, cc);

  router::RouterConfig rc;
  rc.encoder_dim = sc.d_enc;
  rc.dim = 32;
  rc.layers = 3;
  rc.satellites = corpus.catalog.size();
  rc.mlp_hidden = 32;

  const auto scenario = eval::Scenario::balance();
  train::TrainConfig tc;
  tc.learning_rate = 3e-3;
  tc.max_epochs = 200;
  tc.alpha = scenario.alpha;
  tc.seed = seed;
  const auto trained = train::train(corpus, split, &groups, rc, tc);

  std::vector<eval::EvalReport> reports = {
      eval::baseline_random(corpus, split.test, scenario, 50, seed),
      eval::baseline_best_candidate(corpus, split.test, scenario),
      eval::evaluate_router("radialrouter", eval::model_decision(trained.state.best), corpus, split.test, scenario),
      eval::baseline_oracle(corpus, split.test, scenario)};
  std::fputs(eval::table1_csv(reports).c_str(), stdout);

  const auto& q = corpus.queries[split.test.front()];
  const auto d = trained.state.best.route(corpus.embedding(q), corpus.catalog);
  std::printf("query %s (%s) -> %s\n", q.id.c_str(), q.dataset_tag.c_str(), d.chosen_name.c_str());
  return 0;
}
