#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "svoa/core.hpp"
#include "svoa/embedding.hpp"
#include "svoa/index.hpp"
#include "svoa/metrics.hpp"
#include "svoa/retrieval.hpp"

namespace svoa {

struct QueryRecord {
  std::string query_id;
  std::string text;
  std::vector<std::string> relevant_conv_ids;

  RelevantSet relevant() const { return {relevant_conv_ids.begin(), relevant_conv_ids.end()}; }
  bool operator==(const QueryRecord&) const = default;
};

/// Corpus file: one {conv_id, messages:[{role, text}]} object per line.
/// Throws Error("<path>:<line>: ...") on schema violations or duplicate ids.
std::vector<ConversationRecord> load_corpus(const std::filesystem::path& path);

/// Query file: one {query_id, text, relevant_conv_ids:[...]} object per line.
/// When `known_conv_ids` is given, every relevant id must be in it.
std::vector<QueryRecord> load_queries(const std::filesystem::path& path,
                                      const std::unordered_set<std::string>* known_conv_ids = nullptr);

void write_corpus(const std::filesystem::path& path, std::span<const ConversationRecord> corpus);
void write_queries(const std::filesystem::path& path, std::span<const QueryRecord> queries);

nlohmann::json conversation_to_json(const ConversationRecord& conv);
/// Assigns message indices 0..n-1 and validates the record.
ConversationRecord conversation_from_json(const nlohmann::json& j);

/// One index plus the backend that embeds queries for it.
struct BenchmarkTarget {
  const SemanticIndexStore* store = nullptr;
  EmbeddingBackend* backend = nullptr;
};

struct BenchmarkOptions {
  ScoringConfig scoring;
  std::size_t workers = 1;
  EmbedOptions embed;
  /// Ranked list depth; must cover the largest report cutoff.
  std::size_t depth = 20;
};

/// Embeds every query once per target, ranks (summing totals across targets
/// when there are several), and averages every metric. Only the scoring
/// step is timed. Throws when a backend's model_id differs from its store's
/// manifest or when relevant ids are missing from the index.
MetricsReport run_benchmark(std::span<const BenchmarkTarget> targets,
                            std::span<const QueryRecord> queries, EmbeddingCache* cache,
                            const BenchmarkOptions& options);

/// Ranked conv_id lists (depth options.depth) for every query.
std::vector<std::vector<std::string>> rank_queries(std::span<const BenchmarkTarget> targets,
                                                   std::span<const QueryRecord> queries,
                                                   EmbeddingCache* cache,
                                                   const BenchmarkOptions& options,
                                                   double* mean_scoring_seconds = nullptr);

MetricsReport evaluate_rankings(std::span<const std::vector<std::string>> rankings,
                                std::span<const QueryRecord> queries);

struct WeightSearchConfig {
  std::size_t sample_count = 1000;
  double min_weight = 0.0;
  double max_weight = 2.0;
  std::string objective = "ndcg@20";
  std::uint64_t seed = 0;
};

struct WeightSearchResult {
  std::array<double, kComponentKindCount> weights{};
  double objective = 0.0;
  double uniform_objective = 0.0;
  /// Index of the winning candidate; 0 is the uniform vector.
  std::size_t best_candidate = 0;
  std::size_t candidates_evaluated = 0;
};

/// Random search over per-component weights of the active kinds. Candidate 0
/// is all ones; later candidates replace the incumbent only when strictly
/// better, so the result never falls below the uniform baseline.
WeightSearchResult optimize_weights(const SemanticIndexStore& store, EmbeddingBackend& backend,
                                    std::span<const QueryRecord> queries, EmbeddingCache* cache,
                                    const ScoringConfig& base, const WeightSearchConfig& search);

/// Reference values from the best published system (GPT-3.5-turbo with the
/// OpenAI-large embeddings); printed for comparison, never asserted.
inline constexpr double kReferenceAcc1 = 0.4085;
inline constexpr double kReferenceNdcg20 = 0.3198;

}  // namespace svoa
