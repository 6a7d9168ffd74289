// Command-line front end: ingest, query, eval, optimize-weights, cluster,
// serve and generate.
#include <algorithm>
#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "svoa/analysis.hpp"
#include "svoa/config.hpp"
#include "svoa/eval.hpp"
#include "svoa/http_server.hpp"
#include "svoa/ingest_runner.hpp"
#include "svoa/service.hpp"
#include "svoa/synthetic.hpp"

namespace {

using namespace svoa;
using nlohmann::json;

struct Common {
  std::string config_path;
  std::string cache_path;
  std::size_t workers = 0;
  bool verbose = false;
};

AppConfig resolve_config(const Common& common) {
  AppConfig cfg = common.config_path.empty() ? AppConfig{} : load_config(common.config_path);
  if (!common.cache_path.empty()) cfg.paths.cache = common.cache_path;
  if (common.workers > 0) cfg.workers = common.workers;
  return cfg;
}

std::unique_ptr<EmbeddingCache> open_cache(const AppConfig& cfg) {
  if (cfg.paths.cache.empty()) return std::make_unique<EmbeddingCache>();
  return std::make_unique<EmbeddingCache>(cfg.paths.cache);
}

SemanticIndexStore load_index(const std::string& path) {
  spdlog::info("loading index {}", path);
  auto store = load(path);
  spdlog::info("{} conversations, model {}", store.size(), store.manifest().model_id);
  return store;
}

HttpServer* g_server = nullptr;

void handle_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("svoa");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");

  CLI::App app{"Conversation retrieval over SVOA semantic indices"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_path, "JSON configuration file");
  app.add_option("--cache", common.cache_path, "Embedding cache file (JSONL)");
  app.add_option("--workers", common.workers, "Worker threads");
  app.add_flag("-v,--verbose", common.verbose, "Debug logging");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Extract and embed a corpus into an index file");
  std::string corpus_path, out_path, mode;
  std::optional<std::size_t> context_k;
  bool no_resume = false;
  ingest->add_option("--corpus", corpus_path, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", out_path, "Index file to write")->required();
  ingest->add_option("--mode", mode, "two-step or single-step")
      ->check(CLI::IsMember({"two-step", "single-step"}));
  ingest->add_option("--context-k", context_k, "Previous messages given as context");
  ingest->add_flag("--no-resume", no_resume, "Ignore an existing progress file");

  // query
  auto* query = app.add_subcommand("query", "Rank conversations for one query");
  std::string index_path, text, combo;
  std::size_t top_k = 10;
  std::optional<double> bm25_weight;
  bool as_json = false;
  query->add_option("--index", index_path, "Index file")->required()->check(CLI::ExistingFile);
  query->add_option("--text", text, "Query text")->required();
  query->add_option("--top-k", top_k, "Results to return")->check(CLI::PositiveNumber);
  query->add_option("--combination", combo, "Component combination name");
  query->add_option("--bm25-weight", bm25_weight, "Weight of the BM25 term");
  query->add_flag("--json", as_json, "Print JSON");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate against a labelled query set");
  std::vector<std::string> eval_indices;
  std::string queries_path;
  bool all_combos = false;
  eval->add_option("--index", eval_indices, "Index file; repeat for an ensemble")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--queries", queries_path, "Query JSONL")->required()->check(CLI::ExistingFile);
  eval->add_option("--combination", combo, "Component combination name");
  eval->add_flag("--all-combinations", all_combos, "One row per named combination");
  eval->add_option("--bm25-weight", bm25_weight, "Weight of the BM25 term");
  eval->add_flag("--json", as_json, "Print JSON");

  // optimize-weights
  auto* opt = app.add_subcommand("optimize-weights", "Random search over component weights");
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  std::string objective = "ndcg@20";
  opt->add_option("--index", index_path, "Index file")->required()->check(CLI::ExistingFile);
  opt->add_option("--queries", queries_path, "Query JSONL")->required()->check(CLI::ExistingFile);
  opt->add_option("--samples", samples, "Candidate weight vectors");
  opt->add_option("--seed", seed, "Random seed");
  opt->add_option("--objective", objective, "Metric to maximize, e.g. ndcg@20");
  opt->add_option("--combination", combo, "Component combination name");
  opt->add_flag("--json", as_json, "Print JSON");

  // cluster
  auto* cluster = app.add_subcommand("cluster", "k-means over SV/SVO/SVOA embeddings");
  std::string kind_name = "sv";
  std::size_t k = 15;
  std::size_t rep_count = 5;
  cluster->add_option("--index", index_path, "Index file")->required()->check(CLI::ExistingFile);
  cluster->add_option("--kind", kind_name, "sv, svo or svoa")
      ->check(CLI::IsMember({"sv", "svo", "svoa"}));
  cluster->add_option("--k", k, "Number of clusters")->check(CLI::PositiveNumber);
  cluster->add_option("--seed", seed, "Random seed");
  cluster->add_option("--representatives", rep_count, "Samples per cluster");
  cluster->add_flag("--json", as_json, "Print JSON");

  // serve
  auto* serve = app.add_subcommand("serve", "Serve queries over HTTP");
  std::string bind = "127.0.0.1:8080";
  serve->add_option("--index", index_path, "Index file")->required()->check(CLI::ExistingFile);
  serve->add_option("--bind", bind, "host:port");

  // generate
  auto* gen = app.add_subcommand("generate", "Write a planted-relevance synthetic corpus");
  SyntheticOptions synth;
  std::string queries_out;
  gen->add_option("--corpus", corpus_path, "Corpus JSONL to write")->required();
  gen->add_option("--queries", queries_out, "Query JSONL to write")->required();
  gen->add_option("--conversations", synth.conversations, "Conversation count");
  gen->add_option("--query-count", synth.queries, "Query count");
  gen->add_option("--seed", synth.seed, "Random seed");

  CLI11_PARSE(app, argc, argv);
  if (common.verbose) spdlog::set_level(spdlog::level::debug);

  try {
    AppConfig cfg = resolve_config(common);

    if (*ingest) {
      if (!mode.empty()) cfg.extraction.mode = parse_extraction_mode(mode);
      if (context_k) cfg.extraction.context_window_k = *context_k;
      const auto corpus = load_corpus(corpus_path);
      spdlog::info("ingesting {} conversations ({})", corpus.size(),
                   to_string(cfg.extraction.mode));
      auto chat = make_chat_backend(cfg.chat);
      auto embedder = make_embedding_backend(cfg.embedding);
      auto cache = open_cache(cfg);
      IngestRunOptions options;
      options.ingest.extraction = cfg.extraction_config();
      options.ingest.embed = cfg.embed_options();
      options.workers = cfg.workers;
      options.resume = !no_resume;
      IngestSummary summary;
      try {
        summary = run_ingest(corpus, out_path, options, *chat, *embedder, cache.get());
      } catch (const BackendError& e) {
        spdlog::error("backend failure: {}", e.what());
        spdlog::error("progress kept in {}; rerun to resume", progress_path(out_path).string());
        return 3;
      }
      std::cout << summary.to_json().dump(2) << '\n';
      return 0;
    }

    if (*query) {
      auto store = load_index(index_path);
      auto backend = make_embedding_backend_for(cfg.embedding, store.manifest());
      auto cache = open_cache(cfg);
      QueryService service(std::move(store), std::move(backend), cfg, cache.get());
      QueryRequest req;
      req.text = text;
      req.top_k = top_k;
      if (!combo.empty()) req.combination = combo;
      req.bm25_weight = bm25_weight;
      const json result = service.query(req);
      if (as_json) {
        std::cout << result.dump(2) << '\n';
        return 0;
      }
      std::size_t rank = 1;
      for (const auto& hit : result["results"]) {
        std::cout << rank++ << ". " << hit["conv_id"].get<std::string>()
                  << "  total=" << hit["total"].get<double>() << '\n';
        for (const auto& [kind, score] : hit["scores"].items()) {
          std::string best = hit["best_text"][kind].get<std::string>().substr(0, 100);
          std::replace(best.begin(), best.end(), '\n', ' ');
          std::cout << "     " << kind << " " << score.get<double>() << "  " << best << '\n';
        }
        if (hit.contains("bm25")) std::cout << "     bm25 " << hit["bm25"].get<double>() << '\n';
        std::cout << "     best svoa: " << hit["best_svoa"].get<std::string>() << '\n';
      }
      return 0;
    }

    if (*eval) {
      std::vector<SemanticIndexStore> stores;
      std::vector<std::unique_ptr<EmbeddingBackend>> backends;
      for (const auto& p : eval_indices) {
        stores.push_back(load_index(p));
        backends.push_back(make_embedding_backend_for(cfg.embedding, stores.back().manifest()));
      }
      std::unordered_set<std::string> known;
      for (const auto& e : stores.front().entries()) known.insert(e.record.conv_id);
      const auto queries = load_queries(queries_path, &known);
      auto cache = open_cache(cfg);
      std::vector<BenchmarkTarget> targets;
      for (std::size_t i = 0; i < stores.size(); ++i) targets.push_back({&stores[i], backends[i].get()});

      BenchmarkOptions options;
      options.scoring = cfg.scoring_config();
      if (bm25_weight) options.scoring.bm25_weight = *bm25_weight;
      options.workers = cfg.workers;
      options.embed = cfg.embed_options();

      std::vector<std::string> combos;
      if (all_combos) {
        combos = combination_names();
      } else {
        combos.push_back(combo.empty() ? cfg.scoring.combination : combo);
      }
      std::vector<MetricsReport> reports;
      for (const auto& name : combos) {
        options.scoring.active = combination(name);
        auto report = run_benchmark(targets, queries, cache.get(), options);
        report.label = name;
        reports.push_back(std::move(report));
      }
      if (as_json) {
        json out = json::array();
        for (const auto& r : reports) out.push_back(r.to_json());
        std::cout << out.dump(2) << '\n';
      } else {
        std::cout << format_metrics_table(reports);
        for (const auto& r : reports) {
          std::cout << r.label << ": mean scoring time " << r.mean_scoring_seconds * 1000.0
                    << " ms/query over " << r.query_count << " queries\n";
        }
        std::cout << "reference (GPT-3.5-turbo + OpenAI-large): acc@1 " << kReferenceAcc1
                  << ", ndcg@20 " << kReferenceNdcg20 << '\n';
      }
      return 0;
    }

    if (*opt) {
      auto store = load_index(index_path);
      auto backend = make_embedding_backend_for(cfg.embedding, store.manifest());
      std::unordered_set<std::string> known;
      for (const auto& e : store.entries()) known.insert(e.record.conv_id);
      const auto queries = load_queries(queries_path, &known);
      auto cache = open_cache(cfg);
      ScoringConfig base = cfg.scoring_config();
      if (!combo.empty()) base.active = combination(combo);
      WeightSearchConfig search;
      search.sample_count = samples;
      search.seed = seed;
      search.objective = objective;
      const auto result = optimize_weights(store, *backend, queries, cache.get(), base, search);
      json weights = json::object();
      for (ComponentKind kk : base.active.kinds()) {
        weights[std::string(to_string(kk))] = result.weights[to_index(kk)];
      }
      const json out = {{"objective", objective},
                        {"best", result.objective},
                        {"uniform", result.uniform_objective},
                        {"best_candidate", result.best_candidate},
                        {"candidates", result.candidates_evaluated},
                        {"weights", weights}};
      if (as_json) {
        std::cout << out.dump(2) << '\n';
      } else {
        std::cout << objective << " best " << result.objective << " (uniform "
                  << result.uniform_objective << ", candidate " << result.best_candidate << " of "
                  << result.candidates_evaluated << ")\n";
        for (const auto& [name, w] : weights.items()) {
          std::cout << "  " << name << " " << w.get<double>() << '\n';
        }
      }
      return 0;
    }

    if (*cluster) {
      const auto store = load_index(index_path);
      KMeansOptions options;
      options.k = k;
      options.seed = seed;
      options.workers = cfg.workers;
      const auto report =
          cluster_components(store, parse_component_kind(kind_name), options, rep_count);
      if (as_json) {
        std::cout << cluster_report_to_json(report).dump(2) << '\n';
      } else {
        std::cout << format_cluster_table(report);
      }
      return 0;
    }

    if (*serve) {
      const auto [host, port] = parse_bind_address(bind);
      auto store = load_index(index_path);
      auto backend = make_embedding_backend_for(cfg.embedding, store.manifest());
      auto cache = open_cache(cfg);
      QueryService service(std::move(store), std::move(backend), cfg, cache.get());
      HttpServer server(service);
      g_server = &server;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      spdlog::info("listening on {}:{}", host, port);
      if (!server.listen(host, port)) {
        spdlog::error("cannot bind {}:{}", host, port);
        return 1;
      }
      return 0;
    }

    if (*gen) {
      const auto data = generate_synthetic(synth);
      write_corpus(corpus_path, data.corpus);
      write_queries(queries_out, data.queries);
      spdlog::info("wrote {} conversations and {} queries", data.corpus.size(),
                   data.queries.size());
      return 0;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
