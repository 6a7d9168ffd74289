#include "svoa/config.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <set>

#include "svoa/mock_extractor.hpp"

namespace svoa {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::string_view section, std::set<std::string> allowed) {
  if (!j.is_object()) throw Error("config: '" + std::string(section) + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw Error("config: unknown key '" + key + "' in '" + std::string(section) + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

json endpoint_to_json(const HttpEndpoint& e) {
  return {{"base_url", e.base_url},
          {"api_key_env", e.api_key_env},
          {"timeout_seconds", e.timeout_seconds}};
}

void read_endpoint(const json& j, HttpEndpoint& e) {
  read(j, "base_url", e.base_url);
  read(j, "api_key_env", e.api_key_env);
  read(j, "timeout_seconds", e.timeout_seconds);
}

}  // namespace

ExtractionConfig AppConfig::extraction_config() const {
  ExtractionConfig c;
  c.context_window_k = extraction.context_window_k;
  c.mode = extraction.mode;
  c.max_parse_retries = extraction.max_parse_retries;
  c.message_workers = extraction.message_workers;
  c.temperature = chat.temperature;
  c.max_tokens = chat.max_tokens;
  return c;
}

ScoringConfig AppConfig::scoring_config() const {
  ScoringConfig c;
  c.active = combination(scoring.combination);
  c.weights = scoring.weights;
  c.bm25_weight = scoring.bm25_weight;
  c.aggregation = parse_aggregation(scoring.aggregation);
  c.validate();
  return c;
}

EmbedOptions AppConfig::embed_options() const {
  EmbedOptions o;
  o.batch_size = embedding.batch_size;
  return o;
}

json config_to_json(const AppConfig& cfg) {
  json weights = json::object();
  for (ComponentKind k : kAllComponentKinds) {
    weights[std::string(to_string(k))] = cfg.scoring.weights[to_index(k)];
  }
  return {
      {"chat",
       {{"backend", cfg.chat.backend},
        {"endpoint", endpoint_to_json(cfg.chat.endpoint)},
        {"model", cfg.chat.model},
        {"temperature", cfg.chat.temperature},
        {"max_tokens", cfg.chat.max_tokens}}},
      {"embedding",
       {{"backend", cfg.embedding.backend},
        {"endpoint", endpoint_to_json(cfg.embedding.endpoint)},
        {"model", cfg.embedding.model},
        {"dimension", cfg.embedding.dimension},
        {"seed", cfg.embedding.seed},
        {"instruction_prefix", cfg.embedding.instruction_prefix},
        {"batch_size", cfg.embedding.batch_size}}},
      {"extraction",
       {{"context_window_k", cfg.extraction.context_window_k},
        {"mode", to_string(cfg.extraction.mode)},
        {"max_parse_retries", cfg.extraction.max_parse_retries},
        {"message_workers", cfg.extraction.message_workers}}},
      {"scoring",
       {{"combination", cfg.scoring.combination},
        {"weights", weights},
        {"bm25_weight", cfg.scoring.bm25_weight},
        {"aggregation", cfg.scoring.aggregation}}},
      {"paths", {{"index", cfg.paths.index}, {"cache", cfg.paths.cache}}},
      {"workers", cfg.workers},
  };
}

AppConfig config_from_json(const json& j) {
  AppConfig cfg;
  reject_unknown(j, "config", {"chat", "embedding", "extraction", "scoring", "paths", "workers"});
  read(j, "workers", cfg.workers);
  if (j.contains("chat")) {
    const auto& c = j["chat"];
    reject_unknown(c, "chat", {"backend", "endpoint", "model", "temperature", "max_tokens"});
    read(c, "backend", cfg.chat.backend);
    if (c.contains("endpoint")) {
      reject_unknown(c["endpoint"], "chat.endpoint", {"base_url", "api_key_env", "timeout_seconds"});
      read_endpoint(c["endpoint"], cfg.chat.endpoint);
    }
    read(c, "model", cfg.chat.model);
    read(c, "temperature", cfg.chat.temperature);
    read(c, "max_tokens", cfg.chat.max_tokens);
  }
  if (j.contains("embedding")) {
    const auto& e = j["embedding"];
    reject_unknown(e, "embedding",
                   {"backend", "endpoint", "model", "dimension", "seed", "instruction_prefix",
                    "batch_size"});
    read(e, "backend", cfg.embedding.backend);
    if (e.contains("endpoint")) {
      reject_unknown(e["endpoint"], "embedding.endpoint",
                     {"base_url", "api_key_env", "timeout_seconds"});
      read_endpoint(e["endpoint"], cfg.embedding.endpoint);
    }
    read(e, "model", cfg.embedding.model);
    read(e, "dimension", cfg.embedding.dimension);
    read(e, "seed", cfg.embedding.seed);
    read(e, "instruction_prefix", cfg.embedding.instruction_prefix);
    read(e, "batch_size", cfg.embedding.batch_size);
  }
  if (j.contains("extraction")) {
    const auto& x = j["extraction"];
    reject_unknown(x, "extraction",
                   {"context_window_k", "mode", "max_parse_retries", "message_workers"});
    read(x, "context_window_k", cfg.extraction.context_window_k);
    std::string mode(to_string(cfg.extraction.mode));
    read(x, "mode", mode);
    cfg.extraction.mode = parse_extraction_mode(mode);
    read(x, "max_parse_retries", cfg.extraction.max_parse_retries);
    read(x, "message_workers", cfg.extraction.message_workers);
  }
  if (j.contains("scoring")) {
    const auto& s = j["scoring"];
    reject_unknown(s, "scoring", {"combination", "weights", "bm25_weight", "aggregation"});
    read(s, "combination", cfg.scoring.combination);
    if (s.contains("weights")) {
      const auto& w = s["weights"];
      if (!w.is_object()) throw Error("config: scoring.weights must be an object");
      for (const auto& [name, value] : w.items()) {
        if (!value.is_number()) throw Error("config: weight '" + name + "' must be a number");
        cfg.scoring.weights[to_index(parse_component_kind(name))] = value.get<double>();
      }
    }
    read(s, "bm25_weight", cfg.scoring.bm25_weight);
    read(s, "aggregation", cfg.scoring.aggregation);
  }
  if (j.contains("paths")) {
    const auto& p = j["paths"];
    reject_unknown(p, "paths", {"index", "cache"});
    read(p, "index", cfg.paths.index);
    read(p, "cache", cfg.paths.cache);
  }
  if (cfg.chat.backend != "mock" && cfg.chat.backend != "http") {
    throw Error("config: chat.backend must be 'mock' or 'http'");
  }
  if (cfg.embedding.backend != "hashed" && cfg.embedding.backend != "http") {
    throw Error("config: embedding.backend must be 'hashed' or 'http'");
  }
  if (cfg.embedding.dimension == 0) throw Error("config: embedding.dimension must be positive");
  if (cfg.embedding.batch_size == 0) throw Error("config: embedding.batch_size must be positive");
  cfg.scoring_config();
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("config file " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::unique_ptr<ChatBackend> make_chat_backend(const ChatConfig& cfg) {
  if (cfg.backend == "mock") return std::make_unique<MockChatBackend>();
  return std::make_unique<HttpChatBackend>(cfg.endpoint, cfg.model);
}

std::unique_ptr<EmbeddingBackend> make_embedding_backend(const EmbeddingConfig& cfg) {
  if (cfg.backend == "hashed") {
    return std::make_unique<HashedEmbeddingBackend>(cfg.dimension, cfg.seed);
  }
  return std::make_unique<HttpEmbeddingBackend>(cfg.endpoint, cfg.model, cfg.dimension,
                                                cfg.instruction_prefix);
}

std::unique_ptr<EmbeddingBackend> make_embedding_backend_for(const EmbeddingConfig& cfg,
                                                             const IndexManifest& manifest) {
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  if (std::sscanf(manifest.model_id.c_str(), "hashed-bow-d%zu-s%" SCNu64, &dim, &seed) == 2) {
    return std::make_unique<HashedEmbeddingBackend>(dim, seed);
  }
  auto backend = make_embedding_backend(cfg);
  if (backend->model_id() != manifest.model_id) {
    throw Error("index was built with embedding model '" + manifest.model_id +
                "' but the configuration selects '" + backend->model_id() + "'");
  }
  return backend;
}

}  // namespace svoa
