#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "svoa/core.hpp"
#include "svoa/embedding.hpp"
#include "svoa/extraction.hpp"

namespace svoa {

inline constexpr int kIndexFormatVersion = 1;

struct IndexManifest {
  int format_version = kIndexFormatVersion;
  std::string model_id;
  std::size_t dimension = 0;
  ExtractionMode extraction_mode = ExtractionMode::TwoStep;
  /// Free-form; left empty unless the caller stamps it, so that identical
  /// inputs produce identical files.
  std::string created_at;

  bool operator==(const IndexManifest&) const = default;
};

struct IndexedQuadruplet {
  std::string ref;
  SvoaQuadruplet quadruplet;

  bool operator==(const IndexedQuadruplet&) const = default;
};

/// Everything the index holds for one conversation. instances[k] lists the
/// component instances of kind k; the Conversation slot holds exactly one.
struct ConversationEntry {
  ConversationRecord record;
  std::vector<IndexedQuadruplet> quadruplets;
  std::array<std::vector<ComponentInstance>, kComponentKindCount> instances;
  std::vector<ExtractionWarning> warnings;

  const std::vector<ComponentInstance>& of(ComponentKind kind) const {
    return instances[to_index(kind)];
  }
  std::vector<ComponentInstance>& of(ComponentKind kind) { return instances[to_index(kind)]; }
  const ComponentInstance& conversation() const { return of(ComponentKind::Conversation).front(); }

  bool operator==(const ConversationEntry&) const = default;
};

/// "<conv_id>#<n>"
std::string make_quadruplet_ref(const std::string& conv_id, std::size_t n);

/// The component-instance table: conversation id -> embedded instances.
class SemanticIndexStore {
 public:
  SemanticIndexStore() = default;
  explicit SemanticIndexStore(IndexManifest manifest);

  const IndexManifest& manifest() const { return manifest_; }
  void set_created_at(std::string created_at) { manifest_.created_at = std::move(created_at); }

  const std::vector<ConversationEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const ConversationEntry* find(const std::string& conv_id) const;

  /// Validates the entry against the store invariants and appends it.
  /// Throws ContractViolation on a duplicate conv_id or invariant breach.
  void add(ConversationEntry entry);

  /// Removes one semantic index. SV/SVO/SVOA instances pointing at it are
  /// handed to another quadruplet of the same conversation that renders the
  /// same text, or dropped. Throws Error for an unknown ref.
  void remove_index(const std::string& quadruplet_ref);

  /// Throws ContractViolation describing the first broken invariant.
  void validate_entry(const ConversationEntry& entry) const;

  bool operator==(const SemanticIndexStore& other) const {
    return manifest_ == other.manifest_ && entries_ == other.entries_;
  }

 private:
  IndexManifest manifest_;
  std::vector<ConversationEntry> entries_;
  std::unordered_map<std::string, std::size_t> position_;
};

struct IngestOptions {
  ExtractionConfig extraction;
  EmbedOptions embed;
};

/// Extracts, renders, embeds and deduplicates one conversation. Pure with
/// respect to the store: nothing is written anywhere, so a failure leaves no
/// partial entry. Embedding failures propagate.
ConversationEntry ingest_conversation(const ConversationRecord& conv, const IngestOptions& options,
                                      ChatBackend& chat, EmbeddingBackend& embedder,
                                      EmbeddingCache* cache);

// Line-delimited JSON persistence. The first record is the manifest, each
// conversation contributes one {conv_id, messages, quadruplets, warnings}
// record followed by one record per instance, and a footer closes the file.
void persist(const SemanticIndexStore& store, const std::filesystem::path& path);
SemanticIndexStore load(const std::filesystem::path& path);

nlohmann::json manifest_to_json(const IndexManifest& manifest);
IndexManifest manifest_from_json(const nlohmann::json& j);
/// Conversation record followed by its instance records.
std::vector<nlohmann::json> entry_to_records(const ConversationEntry& entry);
/// Inverse of entry_to_records; checks vector dimensions against `dimension`.
ConversationEntry entry_from_records(std::span<const nlohmann::json> records,
                                     std::size_t dimension);

struct IndexStats {
  struct PerConversation {
    std::string conv_id;
    std::array<std::size_t, kComponentKindCount> counts{};
    std::size_t quadruplets = 0;
    std::size_t warnings = 0;
  };
  std::size_t conversations = 0;
  std::size_t messages = 0;
  std::size_t quadruplets = 0;
  std::array<std::size_t, kComponentKindCount> instances{};
  std::size_t warnings = 0;
  std::vector<PerConversation> per_conversation;
};

IndexStats stats(const SemanticIndexStore& store);
nlohmann::json stats_to_json(const IndexStats& s, bool include_per_conversation = false);

}  // namespace svoa
