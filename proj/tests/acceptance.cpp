// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <thread>

#include "gradient_suite.hpp"
#include "probes.hpp"
#include "radialrouter/eval.hpp"
#include "radialrouter/reference.hpp"
#include "radialrouter/service.hpp"

using namespace radialrouter;
using nlohmann::json;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

int failures = 0;
std::vector<eval::EvalReport> all_reports;

void verdict(const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

eval::EvalReport keep(eval::EvalReport r) {
  all_reports.push_back(r);
  return r;
}

// ---------------------------------------------------------------------------

void gradient_suite_criterion() {
  const auto t0 = clock_type::now();
  std::size_t passed = 0, total = 0;
  double worst = 0.0;
  std::string failed;
  for (const auto& c : gradient_suite::all_cases()) {
    const auto r = num::grad_check(c.f, c.params, gradient_suite::kStep, gradient_suite::kTolerance);
    ++total;
    passed += r.passed;
    worst = std::max(worst, r.max_error());
    if (!r.passed) failed += " " + c.name;
  }
  const double secs = seconds_since(t0);
  verdict("gradient_suite", passed == total && secs < 30.0,
          fmt::format("{}/{} cases within rel. tol {:g} (worst {:.2e}), {:.1f} s{}", passed, total,
                      gradient_suite::kTolerance, worst, secs, failed.empty() ? "" : "; failed:" + failed));
}

std::vector<double> random_simplex(std::size_t n, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(0.5, 1.0);
  std::vector<double> p(n);
  double s = 0.0;
  for (double& v : p) s += (v = g(rng) + 1e-300);
  for (double& v : p) v /= s;
  return p;
}

void loss_identities_criterion() {
  std::mt19937_64 rng(99);
  double min_kl = 1e300, max_self = 0.0, max_qq = 0.0, max_ce = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const std::size_t n = 2 + k % 11;
    const auto p = random_simplex(n, rng), q = random_simplex(n, rng);
    min_kl = std::min(min_kl, loss::kl_loss(p, q));
    max_self = std::max(max_self, std::abs(loss::kl_loss(p, p)));
  }
  std::normal_distribution<double> normal;
  for (std::size_t h = 1; h <= 16; ++h) {
    std::vector<double> a(8);
    for (auto& v : a) v = normal(rng);
    std::vector<double> pos = a;
    for (auto& v : pos) v *= 3.0;
    const std::vector<std::vector<double>> negs(h, pos);
    max_qq = std::max(max_qq, std::abs(loss::qq_contrastive_loss(a, pos, negs) - std::log(1.0 + double(h))));
  }
  for (std::size_t n = 2; n <= 64; ++n) {
    const std::vector<double> u(n, 1.0 / double(n));
    max_ce = std::max(max_ce, std::abs(loss::ce_loss(u, n / 2) - std::log(double(n))));
  }
  const bool ok = min_kl >= 0.0 && max_self <= 1e-12 && max_qq <= 1e-12 && max_ce <= 1e-12;
  verdict("loss_identities", ok,
          fmt::format("min KL {:.3e} over 1e4 pairs, max |KL(p,p)| {:.1e}, max |qq-ln(1+H)| {:.1e}, "
                      "max |ce-ln n| {:.1e}",
                      min_kl, max_self, max_qq, max_ce));
}

void table1_criterion() {
  const auto t0 = clock_type::now();
  data::Corpus c;
  c.catalog = reference::routerbench_catalog();
  c.queries = reference::routerbench_reference_queries();
  const auto idx = eval::all_queries(c);
  const std::pair<eval::Scenario, double> rows[] = {{eval::Scenario::performance_first(), 0.813},
                                                    {eval::Scenario::balance(), 0.698},
                                                    {eval::Scenario::cost_first(), 0.660}};
  bool ok = true;
  std::string detail;
  for (const auto& [sc, expected] : rows) {
    const auto r = keep(eval::baseline_best_candidate(c, idx, sc));
    ok &= std::abs(r.macro.score - expected) <= 0.001;
    detail += fmt::format("{} {:.4f} ({}) vs {:.3f}; ", sc.name, r.macro.score, r.note, expected);
  }
  const auto rnd = keep(eval::baseline_random(c, idx, eval::Scenario::performance_first(), 50, 0));
  ok &= std::abs(rnd.expected->performance - 0.627) <= 0.01 && std::abs(rnd.expected->cost - 1.847) <= 0.05;
  const double secs = seconds_since(t0);
  ok &= secs < 1.0;
  verdict("table1_derived_rows", ok,
          detail + fmt::format("random expectation perf {:.4f} vs 0.627, cost {:.4f} vs 1.847; {:.3f} s",
                               rnd.expected->performance, rnd.expected->cost, secs));
}

void radial_invariant_criterion() {
  std::mt19937_64 rng(2025);
  const rf::RadialFormerConfig cfg{8, 16, 4, 4, false, rf::Backbone::radial};
  std::size_t identical = 0, relay = 0;
  for (int k = 0; k < 100; ++k) {
    const auto p = probes::topology_probe(cfg, rng);
    identical += p.identical;
    relay += p.relay_changed;
  }
  verdict("radial_topology_invariant", identical == 100,
          fmt::format("{}/100 probes bit-identical; relay reacted in {}/100", identical, relay));
}

// ---------------------------------------------------------------------------
// Synthetic benchmark

struct Bench {
  data::SynthCorpus syn;
  train::Split split;
  cluster::SemanticGroups groups;
  router::RouterConfig rc;
  train::TrainConfig tc;
  eval::Scenario scenario = eval::Scenario::balance();
};

Bench make_bench(std::uint64_t seed) {
  data::SynthConfig sc;  // 6 groups x 40 queries, 4 LLMs, noise 0.05, d_enc 32
  sc.seed = seed;
  Bench b{data::synth_generate(sc), {}, {}, {}, {}};
  b.split = train::split_dataset(b.syn.corpus.queries, seed);
  cluster::ClusterConfig cc;
  cc.n_groups = 6;
  cc.seed = seed;
  b.groups = cluster::cluster_queries(b.syn.corpus, b.split.train, cc);
  b.rc.encoder_dim = 32;
  b.rc.dim = 32;
  b.rc.layers = 3;
  b.rc.heads = 4;
  b.rc.satellites = 4;
  b.rc.mlp_hidden = 32;
  b.tc.learning_rate = 3e-3;
  b.tc.max_epochs = 200;
  b.tc.n_groups = 6;
  b.tc.seed = seed;
  b.tc.alpha = b.scenario.alpha;
  return b;
}

void end_to_end_criterion() {
  const auto t0 = clock_type::now();
  const auto b = make_bench(1);
  const auto first = train::train(b.syn.corpus, b.split, &b.groups, b.rc, b.tc);
  const double secs = seconds_since(t0);
  const auto second = train::train(b.syn.corpus, b.split, &b.groups, b.rc, b.tc);
  const auto& test = b.split.test;
  const auto router = keep(
      eval::evaluate_router("radialrouter", eval::model_decision(first.state.best), b.syn.corpus, test, b.scenario));
  const auto best = keep(eval::baseline_best_candidate(b.syn.corpus, test, b.scenario));
  const auto oracle = keep(eval::baseline_oracle(b.syn.corpus, test, b.scenario));
  keep(eval::baseline_random(b.syn.corpus, test, b.scenario, 50, 1));
  const bool same = first.state.best.parameter_hash() == second.state.best.parameter_hash();
  const double ratio = router.macro.score / oracle.macro.score;
  const bool ok = ratio >= 0.95 && router.macro.score > best.macro.score && same && secs < 300.0;
  verdict("end_to_end_synthetic", ok,
          fmt::format("test score {:.4f} = {:.4f} x oracle {:.4f}; best candidate {:.4f}; hash {} {} across runs; "
                      "{:.1f} s per run (best epoch {})",
                      router.macro.score, ratio, oracle.macro.score, best.macro.score, first.state.best.parameter_hash(),
                      same ? "identical" : "DIFFERS", secs, first.state.best_epoch));
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

void ablation_criterion() {
  const auto t0 = clock_type::now();
  std::vector<double> kl, ce, qq, no_qq;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const auto b = make_bench(seed);
    auto run = [&](const std::string& variant) {
      const auto r = eval::ablation_run(b.syn.corpus, b.split, &b.groups, b.rc, b.tc, b.scenario,
                                        eval::ablation_variant(variant));
      keep(r.report);
      return r.report.macro.score;
    };
    const double with_kl = run("radialrouter");
    kl.push_back(with_kl);
    qq.push_back(with_kl);
    ce.push_back(run("with_ce"));
    no_qq.push_back(run("without_qq"));
  }
  const double m_kl = median3(kl), m_ce = median3(ce), m_qq = median3(qq), m_no = median3(no_qq);
  const bool ok = m_kl >= m_ce && m_qq >= m_no - 0.01;
  verdict("ablation_directionality", ok,
          fmt::format("median score KL {:.4f} vs CE {:.4f}; qq {:.4f} vs no-qq {:.4f} (band 0.01); "
                      "3 seeds, {:.0f} s",
                      m_kl, m_ce, m_qq, m_no, seconds_since(t0)));
}

void complexity_criterion() {
  using rf::Backbone;
  bool ok = true;
  std::string detail;
  for (auto [n, d, t] : {std::tuple<std::size_t, std::size_t, std::size_t>{8, 32, 2}, {64, 32, 2}, {8, 64, 4}}) {
    for (auto b : {Backbone::radial, Backbone::star, Backbone::transformer}) {
      const rf::RadialFormerConfig cfg{n, d, t, 4, false, b};
      const auto c = probes::measure_forward(cfg);
      ok &= c.multiply_adds == rf::flop_count(cfg) && c.attention_calls == t * (n + 1);
    }
    detail += fmt::format("({},{},{}) radial {} ; ", n, d, t,
                          rf::flop_count({n, d, t, 4, false, Backbone::radial}));
  }
  bool affine = true;
  for (std::size_t n = 2; n < 128; ++n) {
    auto at = [](std::size_t k) { return rf::flop_count({k, 32, 2, 4, false, Backbone::radial}); };
    affine &= at(n + 1) - at(n) == at(n) - at(n - 1);
  }
  const double ratio = double(rf::flop_count({64, 32, 2, 4, false, Backbone::radial})) /
                       double(rf::flop_count({8, 32, 2, 4, false, Backbone::radial}));
  ok &= affine && ratio >= 7.0 && ratio <= 9.0;
  verdict("complexity", ok,
          detail + fmt::format("instrumented counts {} formula; affine in n: {}; count(64)/count(8) = {:.3f}",
                               ok ? "equal" : "vs", affine ? "yes" : "no", ratio));
}

void pool_growth_criterion() {
  const auto b = make_bench(21);
  const auto& c = b.syn.corpus;
  std::vector<std::string> order;
  for (const auto& e : c.catalog.entries()) order.push_back(e.name);
  std::sort(order.begin(), order.end(), [&](const auto& x, const auto& y) {
    return c.catalog[*c.catalog.index_of(x)].cost < c.catalog[*c.catalog.index_of(y)].cost;
  });
  bool ok = true;
  std::string trace;
  for (const auto& sc : eval::named_scenarios()) {
    const auto rows = eval::pool_growth(c, b.split.test, order, sc);
    double last = -std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
      if (r.router != "oracle") continue;
      ok &= r.macro.score >= last;
      last = r.macro.score;
      if (sc == eval::Scenario::balance()) trace += fmt::format("{:.4f} ", r.macro.score);
    }
    const auto single = eval::constant_router(c, b.split.test, sc, *c.catalog.index_of(order.front()));
    ok &= rows[0].macro == single.macro && rows[1].macro == single.macro;
  }
  verdict("pool_growth_monotonicity", ok,
          "balance oracle by pool size: " + trace + "; pool-size-1 rows equal the single LLM's stats exactly");
}

void service_criterion() {
  router::RouterConfig rc;  // n=11, d=128, T=6, d_enc=768
  const auto catalog = reference::routerbench_catalog();
  const auto dir = std::filesystem::temp_directory_path() / "rr_acceptance_service";
  std::filesystem::create_directories(dir);
  train::Checkpoint ck;
  ck.router_config = rc;
  ck.catalog = catalog;
  ck.state.best = router::RouterModel::init(rc, 3);
  ck.state.model = ck.state.best;
  train::save_checkpoint(dir / "checkpoint.json", ck);
  const auto loaded = train::load_checkpoint(dir / "checkpoint.json");
  const auto svc = std::make_shared<const service::RouteService>(loaded.model(), loaded.catalog,
                                                                 hash_file(dir / "checkpoint.json"));
  std::filesystem::remove_all(dir);

  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  std::vector<double> e(768);
  for (auto& v : e) v = normal(rng);
  const std::string body = json{{"embedding", e}}.dump();

  service::HttpServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  server.start();
  std::vector<std::string> decisions(100);
  std::vector<std::thread> threads;
  for (int k = 0; k < 100; ++k) {
    threads.emplace_back([&, k] {
      httplib::Client cli("127.0.0.1", port);
      cli.set_read_timeout(60, 0);
      if (auto res = cli.Post("/route", body, "application/json"); res && res->status == 200) {
        auto j = json::parse(res->body);
        j.erase("latency_ms");
        decisions[k] = j.dump();
      }
    });
  }
  for (auto& t : threads) t.join();
  const std::set<std::string> distinct(decisions.begin(), decisions.end());
  const bool agree = distinct.size() == 1 && !distinct.begin()->empty();

  httplib::Client cli("127.0.0.1", port);
  const auto health = cli.Get("/healthz");
  const bool hash_ok = health && health->status == 200 &&
                       json::parse(health->body).at("catalog_hash") == ck.catalog.hash();
  server.stop();

  std::vector<double> lat;
  for (int k = 0; k < 10; ++k) (void)svc->route(body);
  for (int k = 0; k < 200; ++k) {
    const auto t0 = clock_type::now();
    const auto r = svc->route(body);
    lat.push_back(std::chrono::duration<double, std::milli>(clock_type::now() - t0).count());
    if (r.status != 200) lat.back() = 1e9;
  }
  std::nth_element(lat.begin(), lat.begin() + 100, lat.end());
  const double p50 = lat[100];
  verdict("service_contract", agree && hash_ok && p50 < 5.0,
          fmt::format("100 concurrent requests -> {} distinct decision(s); /healthz catalog hash {}; "
                      "p50 route latency {:.2f} ms (n=11, d=128, T=6, d_enc=768)",
                      distinct.size(), hash_ok ? "matches checkpoint" : "MISMATCH", p50));
}

void oracle_dominance_criterion() {
  // Every report above passed the in-line dominance check; re-verify and add random routers.
  std::size_t checked = 0;
  bool ok = !all_reports.empty();
  for (const auto& r : all_reports) {
    ok &= r.router == "random" ? r.oracle_score >= r.macro.score - 1e-12 : r.oracle_score >= r.macro.score;
    ++checked;
  }
  const auto b = make_bench(31);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> pick(0, b.syn.corpus.catalog.size() - 1);
  std::size_t random_ok = 0;
  for (const double alpha : {0.0, 0.02, 0.1, 0.5}) {
    const auto sc = eval::Scenario::custom(alpha);
    for (int k = 0; k < 250; ++k) {
      std::vector<std::size_t> choices(b.split.test.size());
      for (auto& x : choices) x = pick(rng);
      try {
        const auto r = eval::report_from_choices("random", b.syn.corpus, b.split.test, choices, sc);
        random_ok += r.oracle_score >= r.macro.score;
      } catch (const ContractError&) {
      }
    }
  }
  ok &= random_ok == 1000;
  verdict("oracle_dominance", ok,
          fmt::format("{} reports from this run and {}/1000 random routers score at or below the oracle", checked,
                      random_ok));
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const auto t0 = clock_type::now();
  gradient_suite_criterion();
  loss_identities_criterion();
  table1_criterion();
  radial_invariant_criterion();
  end_to_end_criterion();
  ablation_criterion();
  complexity_criterion();
  pool_growth_criterion();
  service_criterion();
  oracle_dominance_criterion();
  std::printf("%d failure(s), %.1f s total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
