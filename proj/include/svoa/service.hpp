#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>

#include <json.hpp>

#include "svoa/config.hpp"
#include "svoa/embedding.hpp"
#include "svoa/index.hpp"
#include "svoa/retrieval.hpp"

namespace svoa {

struct QueryRequest {
  std::string text;
  std::size_t top_k = 10;
  std::optional<std::string> combination;
  /// Per-kind overrides keyed by kind name.
  std::optional<std::array<double, kComponentKindCount>> weights;
  std::optional<double> bm25_weight;
};

/// Throws ContractViolation on a malformed body.
QueryRequest parse_query_request(const nlohmann::json& body);

/// Breakdown of one hit: per-kind scores, weights, best texts, the best
/// SVOA text (even when SVOA is not an active kind) and the total.
nlohmann::json breakdown_to_json(const ScoreBreakdown& b, const std::string& best_svoa);

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

/// Read-mostly query engine shared by the CLI and the HTTP server. Queries
/// take a shared lock; removal and reload take it exclusively. Query
/// embedding calls are bounded by a semaphore.
class QueryService {
 public:
  QueryService(SemanticIndexStore store, std::unique_ptr<EmbeddingBackend> backend,
               AppConfig config, EmbeddingCache* cache = nullptr,
               std::ptrdiff_t max_concurrent_embeddings = 4);

  /// {"query", "combination", "results":[breakdown...]}. Throws
  /// ContractViolation for bad input.
  nlohmann::json query(const QueryRequest& request);

  ServiceResponse handle_healthz() const;
  ServiceResponse handle_query(const std::string& body);
  ServiceResponse handle_conversation(const std::string& conv_id);
  ServiceResponse handle_stats();
  ServiceResponse handle_remove(const std::string& body);

  /// Swaps in a new store. Requests arriving meanwhile get 503.
  void reload(SemanticIndexStore store);
  bool reloading() const { return reloading_.load(); }
  void set_reloading(bool value) { reloading_ = value; }

  const AppConfig& config() const { return config_; }

 private:
  EmbeddingVector embed_query(const std::string& text);
  std::optional<ServiceResponse> unavailable() const;

  mutable std::shared_mutex mutex_;
  SemanticIndexStore store_;
  std::unique_ptr<Bm25Index> bm25_;
  std::unique_ptr<EmbeddingBackend> backend_;
  AppConfig config_;
  EmbeddingCache* cache_;
  std::counting_semaphore<> embed_slots_;
  std::atomic<bool> reloading_{false};
};

}  // namespace svoa
