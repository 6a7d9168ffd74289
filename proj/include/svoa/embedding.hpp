#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "svoa/core.hpp"
#include "svoa/extraction.hpp"

namespace svoa {

/// Text embedding backend. embed_batch must return one vector per input, in
/// input order, all of dimension(). Implementations must tolerate concurrent
/// calls.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::string model_id() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) = 0;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Lowercased ASCII alphanumeric runs; bytes >= 0x80 count as word characters
/// so UTF-8 words stay intact.
std::vector<std::string> hash_tokens(std::string_view text);

/// Feature-hashed bag of words. Each token t contributes sign(h) to bucket
/// h mod dimension, where h = splitmix64(fnv1a64(t) ^ seed) and the sign is
/// the top bit of h (set -> -1). The result is L2-normalized; texts without
/// tokens map to the zero vector.
EmbeddingVector hashed_embed(std::string_view text, std::size_t dimension = 256,
                             std::uint64_t seed = 0);

class HashedEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit HashedEmbeddingBackend(std::size_t dimension = 256, std::uint64_t seed = 0);

  std::string model_id() const override;
  std::size_t dimension() const override { return dimension_; }
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override;

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
};

/// Thread-safe (model_id, text) -> vector map with an optional append-only
/// JSONL backing file of {model_id, text_hash, text, vector} records.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;
  /// Loads existing records from `path` (if present) and appends new inserts.
  explicit EmbeddingCache(std::filesystem::path path);

  EmbeddingCache(const EmbeddingCache&) = delete;
  EmbeddingCache& operator=(const EmbeddingCache&) = delete;

  std::optional<EmbeddingVector> lookup(const std::string& model_id, const std::string& text) const;
  void insert(const std::string& model_id, const std::string& text, const EmbeddingVector& vector);
  std::size_t size() const;

 private:
  struct Key {
    std::string model_id;
    std::string text;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };

  mutable std::shared_mutex mutex_;
  std::unordered_map<Key, EmbeddingVector, KeyHash> entries_;
  std::optional<std::filesystem::path> path_;
  std::ofstream out_;
};

struct EmbedOptions {
  std::size_t batch_size = 64;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{100};
};

/// Raised after all retries of one or more batches failed.
class EmbeddingError : public BackendError {
 public:
  EmbeddingError(const std::string& what, std::vector<std::size_t> failed_indices)
      : BackendError(what), failed_indices_(std::move(failed_indices)) {}
  /// Positions in the input list whose batch failed.
  const std::vector<std::size_t>& failed_indices() const { return failed_indices_; }

 private:
  std::vector<std::size_t> failed_indices_;
};

/// Cache-first embedding of `texts`. Misses are deduplicated, sent to the
/// backend in batches, L2-normalized and cached. Empty strings map to the
/// zero vector without a backend call. Output order matches input order.
std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts,
                                         EmbeddingBackend& backend, EmbeddingCache* cache,
                                         const EmbedOptions& options = {});

/// Wraps another backend and counts embed_batch calls and texts sent.
class CountingEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit CountingEmbeddingBackend(EmbeddingBackend& inner) : inner_(inner) {}

  std::string model_id() const override { return inner_.model_id(); }
  std::size_t dimension() const override { return inner_.dimension(); }
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override {
    ++batches_;
    texts_ += texts.size();
    return inner_.embed_batch(texts);
  }

  std::size_t batches() const { return batches_.load(); }
  std::size_t texts() const { return texts_.load(); }

 private:
  EmbeddingBackend& inner_;
  std::atomic<std::size_t> batches_{0};
  std::atomic<std::size_t> texts_{0};
};

}  // namespace svoa
