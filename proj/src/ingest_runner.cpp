#include "svoa/ingest_runner.hpp"

#include <chrono>
#include <fstream>
#include <mutex>
#include <unordered_map>

#include "svoa/parallel.hpp"

namespace svoa {
namespace {

using nlohmann::json;

// Reads completed entries from a progress file. The first line holds the
// manifest; a torn trailing line from an interrupted write is ignored.
std::unordered_map<std::string, ConversationEntry> read_progress(const std::filesystem::path& path,
                                                                 const IndexManifest& manifest) {
  std::unordered_map<std::string, ConversationEntry> done;
  std::ifstream in(path, std::ios::binary);
  if (!in) return done;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      continue;
    }
    if (first) {
      first = false;
      const IndexManifest recorded = manifest_from_json(j);
      if (recorded.model_id != manifest.model_id || recorded.dimension != manifest.dimension ||
          recorded.extraction_mode != manifest.extraction_mode) {
        throw Error("progress file " + path.string() +
                    " was written with different settings; delete it to start over");
      }
      continue;
    }
    const auto& records = j.at("records");
    std::vector<json> list(records.begin(), records.end());
    auto entry = entry_from_records(list, manifest.dimension);
    done.emplace(entry.record.conv_id, std::move(entry));
  }
  return done;
}

}  // namespace

json IngestSummary::to_json() const {
  json inst = json::object();
  for (ComponentKind k : kAllComponentKinds) inst[std::string(to_string(k))] = instances[to_index(k)];
  return {{"conversations", conversations},
          {"ingested", ingested},
          {"resumed", resumed},
          {"quadruplets", quadruplets},
          {"instances", inst},
          {"warnings", warnings},
          {"mean_seconds_per_conversation", mean_seconds_per_conversation},
          {"embedding_batches", embedding_batches},
          {"embedded_texts", embedded_texts}};
}

std::filesystem::path progress_path(const std::filesystem::path& out) {
  return std::filesystem::path(out.string() + ".progress.jsonl");
}

IngestSummary run_ingest(std::span<const ConversationRecord> corpus,
                         const std::filesystem::path& out, const IngestRunOptions& options,
                         ChatBackend& chat, EmbeddingBackend& embedder, EmbeddingCache* cache) {
  IndexManifest manifest;
  manifest.model_id = embedder.model_id();
  manifest.dimension = embedder.dimension();
  manifest.extraction_mode = options.ingest.extraction.mode;

  const auto progress = progress_path(out);
  std::unordered_map<std::string, ConversationEntry> done;
  if (options.resume) {
    done = read_progress(progress, manifest);
  } else {
    std::filesystem::remove(progress);
  }

  std::ofstream log(progress, std::ios::binary | std::ios::app);
  if (!log) throw Error("cannot write progress file " + progress.string());
  if (std::filesystem::file_size(progress) == 0) {
    log << manifest_to_json(manifest).dump() << '\n';
    log.flush();
  }

  CountingEmbeddingBackend counted(embedder);
  std::vector<std::optional<ConversationEntry>> entries(corpus.size());
  std::vector<std::size_t> todo;
  IngestSummary summary;
  summary.conversations = corpus.size();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto it = done.find(corpus[i].conv_id);
    if (it != done.end()) {
      entries[i] = std::move(it->second);
      ++summary.resumed;
    } else {
      todo.push_back(i);
    }
  }

  std::mutex log_mutex;
  double seconds = 0.0;
  parallel_for(todo.size(), options.workers, [&](std::size_t t) {
    const std::size_t i = todo[t];
    const auto start = std::chrono::steady_clock::now();
    auto entry = ingest_conversation(corpus[i], options.ingest, chat, counted, cache);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const json line = {{"conv_id", entry.record.conv_id}, {"records", entry_to_records(entry)}};
    std::lock_guard lock(log_mutex);
    log << line.dump() << '\n';
    log.flush();
    seconds += elapsed;
    entries[i] = std::move(entry);
  });
  summary.ingested = todo.size();
  log.close();

  SemanticIndexStore store(manifest);
  for (auto& e : entries) store.add(std::move(*e));
  persist(store, out);
  std::filesystem::remove(progress);

  const IndexStats s = stats(store);
  summary.quadruplets = s.quadruplets;
  summary.instances = s.instances;
  summary.warnings = s.warnings;
  summary.mean_seconds_per_conversation =
      todo.empty() ? 0.0 : seconds / static_cast<double>(todo.size());
  summary.embedding_batches = counted.batches();
  summary.embedded_texts = counted.texts();
  return summary;
}

}  // namespace svoa
