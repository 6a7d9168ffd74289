#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include <json.hpp>

#include "svoa/embedding.hpp"
#include "svoa/extraction.hpp"
#include "svoa/http_backends.hpp"
#include "svoa/index.hpp"
#include "svoa/retrieval.hpp"

namespace svoa {

struct ChatConfig {
  /// "mock" or "http".
  std::string backend = "mock";
  HttpEndpoint endpoint{"https://api.openai.com/v1", "OPENAI_API_KEY", 60};
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
  int max_tokens = 1024;
};

struct EmbeddingConfig {
  /// "hashed" or "http".
  std::string backend = "hashed";
  HttpEndpoint endpoint{"https://api.openai.com/v1", "OPENAI_API_KEY", 60};
  std::string model = "text-embedding-3-large";
  std::size_t dimension = 256;
  std::uint64_t seed = 0;
  std::string instruction_prefix;
  std::size_t batch_size = 64;
};

struct ExtractionSettings {
  std::size_t context_window_k = 2;
  ExtractionMode mode = ExtractionMode::TwoStep;
  std::size_t max_parse_retries = 2;
  std::size_t message_workers = 1;
};

struct ScoringSettings {
  std::string combination = "sv_svo_svoa_conv_msg";
  std::array<double, kComponentKindCount> weights{1.0, 1.0, 1.0, 1.0, 1.0};
  double bm25_weight = 0.0;
  std::string aggregation = "max";
};

struct PathSettings {
  std::string index;
  std::string cache;
};

/// Everything the CLI and service need, serializable to one JSON document.
/// Unknown keys are rejected; missing keys keep their defaults.
struct AppConfig {
  ChatConfig chat;
  EmbeddingConfig embedding;
  ExtractionSettings extraction;
  ScoringSettings scoring;
  PathSettings paths;
  std::size_t workers = 1;

  ExtractionConfig extraction_config() const;
  ScoringConfig scoring_config() const;
  EmbedOptions embed_options() const;
};

nlohmann::json config_to_json(const AppConfig& cfg);
AppConfig config_from_json(const nlohmann::json& j);
AppConfig load_config(const std::filesystem::path& path);

std::unique_ptr<ChatBackend> make_chat_backend(const ChatConfig& cfg);
std::unique_ptr<EmbeddingBackend> make_embedding_backend(const EmbeddingConfig& cfg);
/// Embedding backend matching an existing index: for the hashed backend the
/// dimension and seed are read back from the manifest's model_id.
std::unique_ptr<EmbeddingBackend> make_embedding_backend_for(const EmbeddingConfig& cfg,
                                                             const IndexManifest& manifest);

}  // namespace svoa
