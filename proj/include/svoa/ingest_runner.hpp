#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>

#include <json.hpp>

#include "svoa/embedding.hpp"
#include "svoa/extraction.hpp"
#include "svoa/index.hpp"

namespace svoa {

struct IngestRunOptions {
  IngestOptions ingest;
  /// Conversations ingested concurrently.
  std::size_t workers = 1;
  /// Skip conversations already recorded in the progress file.
  bool resume = true;
};

struct IngestSummary {
  std::size_t conversations = 0;
  std::size_t ingested = 0;
  std::size_t resumed = 0;
  std::size_t quadruplets = 0;
  std::array<std::size_t, kComponentKindCount> instances{};
  std::size_t warnings = 0;
  /// Mean wall-clock seconds per newly ingested conversation.
  double mean_seconds_per_conversation = 0.0;
  std::size_t embedding_batches = 0;
  std::size_t embedded_texts = 0;

  nlohmann::json to_json() const;
};

/// "<out>.progress.jsonl"
std::filesystem::path progress_path(const std::filesystem::path& out);

/// Ingests `corpus` into the index file `out`. Each finished conversation
/// is appended to the progress file first, so an interrupted or failed run
/// can resume; the progress file is removed once the index is written.
/// Backend failures propagate after the progress file is flushed.
IngestSummary run_ingest(std::span<const ConversationRecord> corpus,
                         const std::filesystem::path& out, const IngestRunOptions& options,
                         ChatBackend& chat, EmbeddingBackend& embedder, EmbeddingCache* cache);

}  // namespace svoa
