#pragma once

#include <cstdint>
#include <vector>

#include "svoa/core.hpp"
#include "svoa/eval.hpp"

namespace svoa {

struct SyntheticOptions {
  std::uint64_t seed = 0;
  std::size_t conversations = 100;
  std::size_t queries = 20;
  double utterances_per_conversation = 12.3;
  double relevants_per_query = 15.5;
};

struct SyntheticDataset {
  std::vector<ConversationRecord> corpus;
  std::vector<QueryRecord> queries;
  /// The two planted topic words of each query, aligned with `queries`.
  std::vector<std::vector<std::string>> query_topics;
};

/// Topic-templated dialogues with planted relevance. Every query owns two
/// topic words that appear in its relevant conversations and nowhere else,
/// so relevance is decidable from token overlap alone. Totals are exact:
/// the corpus holds round(conversations * utterances_per_conversation)
/// messages and the queries round(queries * relevants_per_query) mappings
/// (clamped to the corpus size per query). Deterministic given the seed.
SyntheticDataset generate_synthetic(const SyntheticOptions& options);

}  // namespace svoa
