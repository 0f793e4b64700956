#pragma once

#include <CLI11.hpp>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "radialrouter/clustering.hpp"
#include "radialrouter/data.hpp"
#include "radialrouter/eval.hpp"
#include "radialrouter/reference.hpp"
#include "radialrouter/router.hpp"
#include "radialrouter/service.hpp"
#include "radialrouter/training.hpp"
#include "radialrouter/util.hpp"

/// Command-line front end. Exit codes: 0 success, 1 internal error,
/// 2 usage or validation error.
namespace radialrouter::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

/// Provenance record written next to every output.
struct RunManifest {
  explicit RunManifest(std::string cmd) : command(std::move(cmd)) {}

  std::string command;
  json config = json::object();
  std::map<std::string, std::string> inputs;  // path -> content hash
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  std::string started_at = utc_timestamp();
  std::string finished_at;

  void add_input(const fs::path& p) {
    if (!p.empty() && fs::exists(p)) inputs[p.string()] = hash_file(p);
  }

  json to_json() const {
    return {{"command", command},   {"config", config},         {"inputs", inputs},
            {"outputs", outputs},   {"seed", seed},             {"version", kVersion},
            {"started_at", started_at}, {"finished_at", finished_at}};
  }

  void write(const fs::path& dir) {
    finished_at = utc_timestamp();
    fs::create_directories(dir);
    write_file_atomic(dir / ("manifest_" + command + ".json"), to_json().dump(2) + "\n");
  }
};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::vector<std::string> scenarios;
  std::string out;
  std::string catalog;
  std::string dataset;
  std::string embeddings;
  std::string manifest;
  std::vector<std::string> checkpoints;
  std::string bind = "127.0.0.1:8080";
  std::string groups;
  // command specific
  std::string input;
  double cost_scale = 1000.0;
  std::optional<std::size_t> epochs;
  std::string resume;
  std::size_t checkpoint_every = 10;
  std::vector<int> tables;
  bool reference = false;
  bool cosine = false;
  std::string pool_order;
  std::string embedding;
  std::string embedding_file;
  std::string text;
  std::string encoder_cmd;
};

inline json load_config(const Options& o) {
  if (o.config.empty()) return json::object();
  try {
    auto j = json::parse(read_file(o.config));
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + o.config + ": " + e.what());
  }
}

inline json section(const json& cfg, const char* name) {
  return cfg.contains(name) ? cfg.at(name) : json::object();
}

inline void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ValidationError(std::string(flag) + " is required");
}

inline fs::path manifest_path(const Options& o) {
  return o.manifest.empty() ? fs::path(o.embeddings).parent_path() / "manifest.txt" : fs::path(o.manifest);
}

inline data::Corpus load_inputs(const Options& o, RunManifest& m) {
  require(o.catalog, "--catalog");
  require(o.dataset, "--dataset");
  require(o.embeddings, "--embeddings");
  for (const auto& p : {fs::path(o.catalog), fs::path(o.dataset), fs::path(o.embeddings), manifest_path(o)}) {
    if (!fs::exists(p)) throw ValidationError("input file not found: " + p.string());
    m.add_input(p);
  }
  return data::load_corpus(o.catalog, o.dataset, o.embeddings, manifest_path(o));
}

inline std::optional<double> scenario_alpha(const Options& o) {
  if (o.alpha) return *o.alpha;
  if (o.scenarios.size() == 1) return eval::scenario_from_string(o.scenarios[0]).alpha;
  return std::nullopt;
}

/// N defaults to the number of source datasets when there are at least two.
inline std::size_t default_groups(const data::Corpus& c) {
  std::set<std::string> tags;
  for (const auto& q : c.queries) tags.insert(q.dataset_tag);
  return tags.size() >= 2 ? tags.size() : 6;
}

// ---------------------------------------------------------------------------

inline int cmd_synth(const Options& o) {
  require(o.out, "--out");
  const auto cfg = load_config(o);
  const auto j = section(cfg, "synth").empty() ? cfg : section(cfg, "synth");
  data::SynthConfig sc;
  sc.n_llms = j.value("n_llms", sc.n_llms);
  sc.n_groups = j.value("n_groups", sc.n_groups);
  sc.queries_per_group = j.value("queries_per_group", sc.queries_per_group);
  sc.d_enc = j.value("d_enc", sc.d_enc);
  sc.noise = j.value("noise", sc.noise);
  sc.centroid_scale = j.value("centroid_scale", sc.centroid_scale);
  sc.spread = j.value("spread", sc.spread);
  sc.seed = o.seed.value_or(j.value("seed", sc.seed));
  RunManifest m{"synth"};
  m.seed = sc.seed;
  m.config = {{"n_llms", sc.n_llms},     {"n_groups", sc.n_groups}, {"queries_per_group", sc.queries_per_group},
              {"d_enc", sc.d_enc},       {"noise", sc.noise},       {"centroid_scale", sc.centroid_scale},
              {"spread", sc.spread},     {"seed", sc.seed}};
  const auto syn = data::synth_generate(sc);
  data::save_corpus(o.out, syn.corpus);
  for (const char* f : {"catalog.json", "dataset.jsonl", "manifest.txt", "embeddings.bin"}) {
    m.outputs.push_back((fs::path(o.out) / f).string());
  }
  m.write(o.out);
  std::cout << "wrote " << syn.corpus.queries.size() << " queries for " << syn.corpus.catalog.size() << " LLMs to "
            << o.out << "\n";
  return kExitOk;
}

inline int cmd_adapt(const Options& o) {
  require(o.input, "--input");
  require(o.out, "--out");
  RunManifest m{"adapt"};
  m.add_input(o.input);
  m.config = {{"input", o.input}, {"cost_scale", o.cost_scale}};
  const auto r = data::routerbench_adapt(read_file(o.input), o.cost_scale);
  fs::create_directories(o.out);
  const fs::path dir(o.out);
  data::save_catalog(dir / "catalog.json", r.catalog);
  data::write_dataset(dir / "dataset.jsonl", r.queries, r.catalog);
  std::vector<std::string> ids;
  for (const auto& q : r.queries) ids.push_back(q.id);
  data::write_manifest(dir / "manifest.txt", ids);
  m.outputs = {(dir / "catalog.json").string(), (dir / "dataset.jsonl").string(), (dir / "manifest.txt").string()};
  m.write(o.out);
  std::cout << "adapted " << r.queries.size() << " queries, " << r.catalog.size() << " LLMs\n";
  return kExitOk;
}

inline cluster::ClusterConfig cluster_config(const json& cfg, const data::Corpus& c, std::uint64_t seed) {
  const auto j = section(cfg, "cluster");
  auto cc = cluster::ClusterConfig::from_json(j);
  if (!j.contains("n_groups")) cc.n_groups = section(cfg, "train").value("n_groups", default_groups(c));
  cc.seed = seed;
  return cc;
}

inline int cmd_cluster(const Options& o) {
  require(o.out, "--out");
  const auto cfg = load_config(o);
  RunManifest m{"cluster"};
  const auto corpus = load_inputs(o, m);
  const std::uint64_t seed = o.seed.value_or(section(cfg, "train").value("seed", std::uint64_t{0}));
  const auto cc = cluster_config(cfg, corpus, seed);
  const auto split = train::split_dataset(corpus.queries, seed);
  if (cc.n_groups > split.train.size()) {
    throw ConfigError("cluster: " + std::to_string(cc.n_groups) + " groups requested for " +
                      std::to_string(split.train.size()) + " training queries");
  }
  const auto groups = cluster::cluster_queries(corpus, split.train, cc);
  const fs::path path = fs::path(o.out) / "groups.json";
  cluster::save_groups(path, groups);
  m.seed = seed;
  m.config = cc.to_json();
  m.outputs = {path.string()};
  m.write(o.out);
  std::cout << "clustered " << split.train.size() << " training queries into " << cc.n_groups << " groups\n";
  return kExitOk;
}

/// Resolves router and training configuration from the config file and flags.
inline std::pair<router::RouterConfig, train::TrainConfig> resolve_train_config(const Options& o, const json& cfg,
                                                                              const data::Corpus& c) {
  auto rc = router::RouterConfig::from_json(section(cfg, "router"));
  if (!section(cfg, "router").contains("encoder_dim")) rc.encoder_dim = c.embeddings.dim();
  if (rc.encoder_dim != c.embeddings.dim()) {
    throw ConfigError("config: router.encoder_dim is " + std::to_string(rc.encoder_dim) + " but the embeddings have " +
                      std::to_string(c.embeddings.dim()) + " dimensions");
  }
  rc.satellites = c.catalog.size();
  auto tc = train::TrainConfig::from_json(section(cfg, "train"));
  if (!section(cfg, "train").contains("n_groups")) tc.n_groups = default_groups(c);
  if (o.seed) tc.seed = *o.seed;
  if (const auto a = scenario_alpha(o)) tc.alpha = *a;
  if (o.epochs) tc.max_epochs = *o.epochs;
  rc.validate();
  tc.validate(c.catalog.size());
  return {rc, tc};
}

inline int cmd_train(const Options& o) {
  require(o.out, "--out");
  const auto cfg = load_config(o);
  RunManifest m{"train"};
  const auto corpus = load_inputs(o, m);
  const fs::path out(o.out);

  router::RouterConfig rc;
  train::TrainConfig tc;
  std::optional<train::TrainState> resume;
  if (!o.resume.empty()) {
    m.add_input(o.resume);
    auto ck = train::load_checkpoint(o.resume, &corpus.catalog);
    if (!ck.with_resume) throw ValidationError("checkpoint " + o.resume + " has no resume state");
    rc = ck.router_config;
    tc = ck.train_config;
    if (o.epochs) tc.max_epochs = *o.epochs;
    tc.validate(corpus.catalog.size());
    resume = std::move(ck.state);
    spdlog::info("resuming at epoch {}", resume->epoch);
  } else {
    std::tie(rc, tc) = resolve_train_config(o, cfg, corpus);
  }

  const auto split = train::split_dataset(corpus.queries, tc.seed);
  std::optional<cluster::SemanticGroups> groups;
  if (tc.loss.lambda > 0.0) {
    const fs::path gp = o.groups.empty() ? out / "groups.json" : fs::path(o.groups);
    if (!fs::exists(gp)) {
      throw ValidationError("lambda > 0 needs a groups file (run `cluster` first or pass --groups): " + gp.string());
    }
    m.add_input(gp);
    groups = cluster::load_groups(gp);
  } else if (!o.groups.empty()) {
    spdlog::info("lambda is 0, ignoring groups file {}", o.groups);
  }

  fs::create_directories(out);
  const fs::path ckpt_path = out / "checkpoint.json";
  const fs::path hist_path = out / "history.jsonl";
  std::ofstream history(hist_path, resume ? std::ios::app : std::ios::trunc);
  if (!history) throw Error("cannot write " + hist_path.string());
  auto checkpoint = [&](const train::TrainState& st) {
    train::Checkpoint ck{rc, tc, corpus.catalog, st, true};
    train::save_checkpoint(ckpt_path, ck);
  };
  const auto result = train::train(corpus, split, groups ? &*groups : nullptr, rc, tc, std::move(resume),
                                   [&](const train::EpochRecord& rec, const train::TrainState& st) {
                                     history << rec.to_json().dump() << "\n" << std::flush;
                                     if (rec.epoch % o.checkpoint_every == 0) checkpoint(st);
                                   });
  checkpoint(result.state);

  m.seed = tc.seed;
  m.config = {{"router", rc.to_json()}, {"train", tc.to_json()}, {"resume", o.resume}};
  m.outputs = {ckpt_path.string(), hist_path.string()};
  m.write(out);
  std::cout << json{{"checkpoint", ckpt_path.string()},
                    {"epochs", result.state.epoch},
                    {"best_epoch", result.state.best_epoch},
                    {"validation_score", result.state.best_score},
                    {"parameter_hash", result.state.best.parameter_hash()}}
                   .dump()
            << "\n";
  return kExitOk;
}

inline std::vector<eval::Scenario> requested_scenarios(const Options& o) {
  std::vector<eval::Scenario> out;
  if (o.alpha) out.push_back(eval::Scenario::custom(*o.alpha));
  for (const auto& s : o.scenarios) {
    if (s == "all") {
      for (const auto& n : eval::named_scenarios()) out.push_back(n);
    } else {
      out.push_back(eval::scenario_from_string(s));
    }
  }
  if (out.empty()) out = eval::named_scenarios();
  return out;
}

inline int cmd_eval(const Options& o) {
  require(o.out, "--out");
  const auto cfg = load_config(o);
  RunManifest m{"eval"};
  const auto scenarios = requested_scenarios(o);
  const auto tables = o.tables.empty() ? std::vector<int>{1} : o.tables;
  for (int t : tables) {
    if (t != 1 && t != 2 && t != 3 && t != 7) throw ValidationError("--table must be 1, 2, 3 or 7");
  }

  data::Corpus corpus;
  std::vector<std::size_t> test;
  train::Split split;
  if (o.reference) {
    corpus.catalog = reference::routerbench_catalog();
    corpus.queries = reference::routerbench_reference_queries();
    test = eval::all_queries(corpus);
  } else {
    corpus = load_inputs(o, m);
  }

  std::vector<train::Checkpoint> checkpoints;
  for (const auto& p : o.checkpoints) {
    m.add_input(p);
    checkpoints.push_back(train::load_checkpoint(p, &corpus.catalog));
  }
  const std::uint64_t seed =
      o.seed.value_or(checkpoints.empty() ? section(cfg, "train").value("seed", std::uint64_t{0})
                                          : checkpoints.front().train_config.seed);
  if (!o.reference) {
    split = train::split_dataset(corpus.queries, seed);
    test = split.test;
  }
  m.seed = seed;

  eval::ReportBundle bundle;
  for (int t : tables) {
    if (t == 1) {
      for (const auto& sc : scenarios) {
        bundle.reports.push_back(eval::baseline_random(corpus, test, sc, 50, seed));
        bundle.reports.push_back(eval::baseline_best_candidate(corpus, test, sc));
        bundle.reports.push_back(eval::baseline_oracle(corpus, test, sc));
        if (o.cosine && !o.reference) {
          eval::CosineConfig cc;
          cc.seed = seed;
          bundle.reports.push_back(eval::baseline_cosine_classifier(corpus, split.train, test, sc, cc));
        }
        for (std::size_t k = 0; k < checkpoints.size(); ++k) {
          const auto& ck = checkpoints[k];
          if (ck.train_config.alpha != sc.alpha) continue;
          auto r = eval::evaluate_router("radialrouter", eval::model_decision(ck.model()), corpus, test, sc);
          r.seed = ck.train_config.seed;
          r.checkpoint_id = ck.model().parameter_hash();
          bundle.reports.push_back(std::move(r));
        }
      }
      continue;
    }
    // Tables 2, 3 and 7 retrain from a template configuration.
    if (o.reference) throw ValidationError("--table " + std::to_string(t) + " needs a dataset, not --reference");
    router::RouterConfig rc;
    train::TrainConfig tc;
    if (!checkpoints.empty()) {
      rc = checkpoints.front().router_config;
      tc = checkpoints.front().train_config;
    } else {
      std::tie(rc, tc) = resolve_train_config(o, cfg, corpus);
    }
    std::optional<cluster::SemanticGroups> groups;
    if (tc.loss.lambda > 0.0) {
      if (o.groups.empty()) throw ValidationError("--table " + std::to_string(t) + " with lambda > 0 needs --groups");
      m.add_input(o.groups);
      groups = cluster::load_groups(o.groups);
    }
    const auto* gp = groups ? &*groups : nullptr;
    if (t == 7) {
      const std::vector<double> alphas = {0.0, 0.01, 0.02, 0.05, 0.1};
      const eval::RouterFactory factory = [&](double a) {
        auto c = tc;
        c.alpha = a;
        const auto r = train::train(corpus, split, gp, rc, c);
        return eval::model_decision(r.state.best);
      };
      bundle.sweep = eval::alpha_sweep(corpus, test, alphas, {{"radialrouter", factory}}, true, seed);
    } else if (t == 3) {
      std::vector<std::string> order;
      if (!o.pool_order.empty()) {
        order = data::load_manifest(o.pool_order);
      } else {
        bool all = true;
        for (const auto& n : reference::pool_growth_order()) all = all && corpus.catalog.index_of(n).has_value();
        if (all && corpus.catalog.size() == reference::pool_growth_order().size()) {
          order = reference::pool_growth_order();
        } else {
          for (const auto& e : corpus.catalog.entries()) order.push_back(e.name);
        }
      }
      const auto sc = scenarios.front();
      const eval::PoolFactory factory = [&](const data::Corpus& sub) {
        auto r = rc;
        r.satellites = sub.catalog.size();
        auto c = tc;
        c.alpha = sc.alpha;
        if (c.loss.selection == loss::SelectionLoss::ql) c.loss.top_k = std::min(c.loss.top_k, sub.catalog.size() / 2);
        if (sub.catalog.size() < 2 && c.loss.selection == loss::SelectionLoss::ql) c.loss.selection = loss::SelectionLoss::kl;
        const auto res = train::train(sub, split, gp, r, c);
        return eval::model_decision(res.state.best);
      };
      bundle.pool = eval::pool_growth(corpus, test, order, sc, factory);
    } else if (t == 2) {
      for (const auto& v : eval::ablation_variants()) {
        bundle.ablation.push_back(eval::ablation_run(corpus, split, gp, rc, tc, scenarios.front(), v));
      }
    }
  }

  const auto written = eval::emit_report(o.out, bundle);
  for (const auto& p : written) m.outputs.push_back(p.string());
  json sc = json::array();
  for (const auto& s : scenarios) sc.push_back(s.to_json());
  m.config = {{"scenarios", sc}, {"tables", tables}, {"reference", o.reference}, {"cosine", o.cosine}};
  m.write(o.out);
  std::cout << eval::table1_csv(bundle.reports);
  return kExitOk;
}

/// Pipes `text` through a shell command and parses its stdout as a JSON
/// embedding (an array, or an object with an "embedding" array).
inline std::vector<double> run_encoder(const std::string& cmd, const std::string& text) {
  const fs::path tmp = fs::temp_directory_path() / ("radialrouter-text-" + std::to_string(::getpid()) + ".txt");
  {
    std::ofstream f(tmp, std::ios::binary);
    f << text;
  }
  const std::string full = cmd + " < '" + tmp.string() + "'";
  std::string output;
  FILE* pipe = ::popen(full.c_str(), "r");
  if (!pipe) throw Error("cannot start encoder command: " + cmd);
  char buf[4096];
  while (const auto n = std::fread(buf, 1, sizeof buf, pipe)) output.append(buf, n);
  const int status = ::pclose(pipe);
  fs::remove(tmp);
  if (status != 0) throw Error("encoder command failed with status " + std::to_string(status));
  try {
    const auto j = json::parse(output);
    return (j.is_object() ? j.at("embedding") : j).get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("encoder output is not a JSON embedding: ") + e.what());
  }
}

inline std::vector<double> parse_embedding(const std::string& text) {
  try {
    const auto j = json::parse(text);
    return (j.is_object() ? j.at("embedding") : j).get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("embedding input is not a JSON array: ") + e.what());
  }
}

inline int cmd_route(const Options& o) {
  if (o.checkpoints.size() != 1) throw ValidationError("--checkpoint is required (exactly once)");
  RunManifest m{"route"};
  std::optional<data::LLMCatalog> active;
  if (!o.catalog.empty()) active = data::load_catalog(o.catalog);
  const auto ck = train::load_checkpoint(o.checkpoints[0], active ? &*active : nullptr);
  std::vector<double> e;
  if (!o.encoder_cmd.empty()) {
    e = run_encoder(o.encoder_cmd, o.text);
  } else if (!o.embedding.empty()) {
    e = parse_embedding(o.embedding);
  } else if (!o.embedding_file.empty()) {
    e = parse_embedding(read_file(o.embedding_file));
  } else {
    std::string all((std::istreambuf_iterator<char>(std::cin)), std::istreambuf_iterator<char>());
    e = parse_embedding(all);
  }
  const auto d = ck.model().route(e, ck.catalog);
  std::cout << json{{"chosen_name", d.chosen_name}, {"chosen_index", d.chosen_index}, {"probabilities", d.probabilities}}
                   .dump()
            << "\n";
  if (!o.out.empty()) {
    m.add_input(o.checkpoints[0]);
    m.seed = ck.train_config.seed;
    m.config = {{"checkpoint", o.checkpoints[0]}};
    m.write(o.out);
  }
  return kExitOk;
}

inline int cmd_serve(const Options& o) {
  if (o.checkpoints.size() != 1) throw ValidationError("--checkpoint is required (exactly once)");
  std::optional<data::LLMCatalog> active;
  if (!o.catalog.empty()) active = data::load_catalog(o.catalog);
  auto ck = train::load_checkpoint(o.checkpoints[0], active ? &*active : nullptr);
  const auto [host, port] = service::parse_bind(o.bind);
  auto svc = std::make_shared<const service::RouteService>(ck.model(), ck.catalog, hash_file(o.checkpoints[0]));
  service::HttpServer server(svc);
  const int bound = server.bind(host, port);
  if (!o.out.empty()) {
    RunManifest m{"serve"};
    m.add_input(o.checkpoints[0]);
    m.seed = ck.train_config.seed;
    m.config = {{"checkpoint", o.checkpoints[0]}, {"bind", host + ":" + std::to_string(bound)}};
    m.write(o.out);
  }
  spdlog::warn("serving on {}:{}", host, bound);
  server.run();
  return kExitOk;
}

// ---------------------------------------------------------------------------

inline void add_common(CLI::App* c, Options& o) {
  c->add_option("--config", o.config, "JSON configuration file");
  c->add_option("--seed", o.seed, "random seed");
  c->add_option("--out", o.out, "output directory");
}

inline void add_corpus(CLI::App* c, Options& o) {
  c->add_option("--catalog", o.catalog, "catalog.json");
  c->add_option("--dataset", o.dataset, "dataset.jsonl");
  c->add_option("--embeddings", o.embeddings, "embeddings.bin (RRE1)");
  c->add_option("--manifest", o.manifest, "manifest.txt (default: next to the embeddings)");
}

inline void add_scenario(CLI::App* c, Options& o) {
  c->add_option("--alpha", o.alpha, "cost weight alpha");
  c->add_option("--scenario", o.scenarios, "performance_first | balance | cost_first | all");
}

/// Parses and runs one command; never throws.
inline int run(int argc, const char* const* argv) {
  configure_logging();
  Options o;
  std::function<int()> action;
  CLI::App app{"RadialRouter: cost-aware LLM routing", "radialrouter"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  auto* synth = app.add_subcommand("synth", "generate the synthetic benchmark corpus");
  add_common(synth, o);
  synth->callback([&] { action = [&] { return cmd_synth(o); }; });

  auto* adapt = app.add_subcommand("adapt", "convert a RouterBench wide CSV export");
  add_common(adapt, o);
  adapt->add_option("--input", o.input, "RouterBench CSV")->required();
  adapt->add_option("--cost-scale", o.cost_scale, "multiplier applied to per-query cost");
  adapt->callback([&] { action = [&] { return cmd_adapt(o); }; });

  auto* clus = app.add_subcommand("cluster", "t-SNE + k-means semantic groups of the training queries");
  add_common(clus, o);
  add_corpus(clus, o);
  clus->callback([&] { action = [&] { return cmd_cluster(o); }; });

  auto* tr = app.add_subcommand("train", "train one router for one alpha");
  add_common(tr, o);
  add_corpus(tr, o);
  add_scenario(tr, o);
  tr->add_option("--groups", o.groups, "groups.json (default: <out>/groups.json)");
  tr->add_option("--epochs", o.epochs, "override max epochs");
  tr->add_option("--resume", o.resume, "continue from a checkpoint");
  tr->add_option("--checkpoint-every", o.checkpoint_every, "epochs between checkpoints")->check(CLI::PositiveNumber);
  tr->callback([&] { action = [&] { return cmd_train(o); }; });

  auto* ev = app.add_subcommand("eval", "evaluate routers and baselines");
  add_common(ev, o);
  add_corpus(ev, o);
  add_scenario(ev, o);
  ev->add_option("--checkpoint", o.checkpoints, "trained checkpoint(s)");
  ev->add_option("--groups", o.groups, "groups.json for retraining tables");
  ev->add_option("--table", o.tables, "1 (scenarios), 2 (ablation), 3 (pool growth), 7 (alpha sweep)");
  ev->add_option("--pool-order", o.pool_order, "file with one LLM name per line");
  ev->add_flag("--reference", o.reference, "use the shipped per-dataset reference statistics");
  ev->add_flag("--cosine", o.cosine, "include the cosine classifier baseline");
  ev->callback([&] { action = [&] { return cmd_eval(o); }; });

  auto* rt = app.add_subcommand("route", "route one embedding");
  rt->add_option("--checkpoint", o.checkpoints, "trained checkpoint")->required();
  rt->add_option("--catalog", o.catalog, "refuse if the checkpoint was trained on another catalog");
  rt->add_option("--embedding", o.embedding, "JSON array");
  rt->add_option("--embedding-file", o.embedding_file, "file holding a JSON array or {\"embedding\": [...]}");
  rt->add_option("--text", o.text, "query text for --encoder-cmd");
  rt->add_option("--encoder-cmd", o.encoder_cmd, "shell command: text on stdin, JSON embedding on stdout");
  rt->add_option("--out", o.out, "directory for the run manifest");
  rt->callback([&] { action = [&] { return cmd_route(o); }; });

  auto* sv = app.add_subcommand("serve", "HTTP routing service");
  sv->add_option("--checkpoint", o.checkpoints, "trained checkpoint")->required();
  sv->add_option("--catalog", o.catalog, "refuse if the checkpoint was trained on another catalog");
  sv->add_option("--bind", o.bind, "HOST:PORT");
  sv->add_option("--out", o.out, "directory for the run manifest");
  sv->callback([&] { action = [&] { return cmd_serve(o); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  try {
    return action();
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace radialrouter::cli
