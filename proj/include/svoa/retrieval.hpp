#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "svoa/core.hpp"
#include "svoa/index.hpp"

namespace svoa {

/// Subset of the five component kinds.
class ComponentSet {
 public:
  constexpr ComponentSet() = default;
  ComponentSet(std::initializer_list<ComponentKind> kinds) {
    for (auto k : kinds) insert(k);
  }
  static ComponentSet all() {
    return {ComponentKind::Conversation, ComponentKind::Message, ComponentKind::SV,
            ComponentKind::SVO, ComponentKind::SVOA};
  }

  void insert(ComponentKind k) { bits_[to_index(k)] = true; }
  bool contains(ComponentKind k) const { return bits_[to_index(k)]; }
  bool empty() const;
  std::size_t size() const;
  std::vector<ComponentKind> kinds() const;

  bool operator==(const ComponentSet&) const = default;

 private:
  std::array<bool, kComponentKindCount> bits_{};
};

/// "sv_svo_svoa_conv_msg" style label; kinds joined in sv, svo, svoa, conv, msg order.
std::string to_string(const ComponentSet& set);

/// The six named combinations evaluated in the reference result tables.
const std::vector<std::string>& combination_names();
/// Resolves one of combination_names(); throws ContractViolation listing the
/// valid names otherwise.
ComponentSet combination(std::string_view name);
/// Comma- or underscore-separated kind names, e.g. "conv,msg,svoa".
ComponentSet parse_component_list(std::string_view list);

enum class Aggregation { Max, Sum, Avg };
std::string_view to_string(Aggregation a);
Aggregation parse_aggregation(std::string_view name);

struct ScoringConfig {
  ComponentSet active = ComponentSet::all();
  std::array<double, kComponentKindCount> weights{1.0, 1.0, 1.0, 1.0, 1.0};
  Aggregation aggregation = Aggregation::Max;
  /// Weight of the max-normalized BM25 term; 0 disables it entirely.
  double bm25_weight = 0.0;
  /// Score of an active component with no instances in a conversation.
  double missing_component_score = 0.0;

  double weight(ComponentKind k) const { return weights[to_index(k)]; }
  /// Throws ContractViolation on an empty component set or negative weight.
  void validate() const;
};

struct ScoreBreakdown {
  std::string conv_id;
  ComponentSet active;
  /// Per-kind similarity S_c; only meaningful for active kinds.
  std::array<double, kComponentKindCount> scores{};
  std::array<double, kComponentKindCount> weights{};
  /// Text of the highest-similarity instance per active kind (empty if none).
  std::array<std::string, kComponentKindCount> best_text{};
  /// Max-normalized BM25 score (before weighting) when the hybrid is on.
  std::optional<double> bm25;
  double bm25_weight = 0.0;
  double total = 0.0;
};

/// Per-kind scores of one conversation against a query, for every kind.
struct ComponentScores {
  std::array<double, kComponentKindCount> scores{};
  std::array<const ComponentInstance*, kComponentKindCount> best{};
};

/// Computes S_c for each kind in `kinds` (others left at 0). Max, Sum or Avg
/// of cosine similarities over the kind's instances; empty kinds get
/// `missing_score`. Throws ContractViolation on dimension mismatch.
ComponentScores component_scores(const EmbeddingVector& query, const ConversationEntry& entry,
                                 const ComponentSet& kinds, Aggregation aggregation,
                                 double missing_score);

/// Weighted total of active kinds, plus bm25_weight * bm25 when given.
double combine_scores(const std::array<double, kComponentKindCount>& scores,
                      const ScoringConfig& cfg, double bm25 = 0.0);

ScoreBreakdown score_conversation(const EmbeddingVector& query, const ConversationEntry& entry,
                                  const ScoringConfig& cfg);

struct RankOptions {
  std::size_t top_k = 10;
  /// Max-normalized BM25 scores aligned with store.entries(); required when
  /// cfg.bm25_weight > 0 and ignored otherwise.
  std::span<const double> bm25;
  std::size_t workers = 1;
};

/// Descending by total, ties broken by ascending conv_id.
std::vector<ScoreBreakdown> rank_conversations(const EmbeddingVector& query,
                                               const SemanticIndexStore& store,
                                               const ScoringConfig& cfg,
                                               const RankOptions& options);

/// Okapi BM25 over lowercased alphanumeric tokens of each conversation's
/// rendered text. IDF is ln(1 + (N - df + 0.5) / (df + 0.5)), floored at 0.
/// Scores are divided by the per-query maximum (all zeros if the max is 0).
class Bm25Index {
 public:
  explicit Bm25Index(const SemanticIndexStore& store, double k1 = 1.2, double b = 0.75);
  /// Document texts directly; ids are positions.
  explicit Bm25Index(std::span<const std::string> documents, double k1 = 1.2, double b = 0.75);

  /// Raw (unnormalized) scores aligned with the documents.
  std::vector<double> raw_scores(std::string_view query) const;
  /// Max-normalized scores aligned with the documents.
  std::vector<double> scores(std::string_view query) const;

  std::size_t size() const { return doc_lengths_.size(); }

 private:
  void build(std::span<const std::string> documents);

  double k1_;
  double b_;
  double avg_length_ = 0.0;
  std::vector<double> doc_lengths_;
  std::unordered_map<std::string, std::vector<std::pair<std::size_t, double>>> postings_;
};

/// conv_id -> max-normalized BM25 score. Throws ContractViolation on an empty store.
std::unordered_map<std::string, double> bm25_scores(std::string_view query_text,
                                                    const SemanticIndexStore& store,
                                                    double k1 = 1.2, double b = 0.75);

struct EnsembleScore {
  std::string conv_id;
  double total = 0.0;
  std::vector<double> per_backend;
};

/// Sums per-store totals (same cfg) for every conversation; `queries[i]` is
/// the query embedded with the backend of `stores[i]`. Throws
/// ContractViolation when the stores do not cover the same conv_ids.
/// `bm25` (aligned with stores[0]) is added once, after summing.
std::vector<EnsembleScore> ensemble_scores(std::span<const EmbeddingVector> queries,
                                           std::span<const SemanticIndexStore* const> stores,
                                           const ScoringConfig& cfg,
                                           std::span<const double> bm25 = {});

/// ensemble_scores sorted like rank_conversations and cut to top_k.
std::vector<EnsembleScore> rank_ensemble(std::span<const EmbeddingVector> queries,
                                         std::span<const SemanticIndexStore* const> stores,
                                         const ScoringConfig& cfg, std::size_t top_k,
                                         std::span<const double> bm25 = {});

}  // namespace svoa
