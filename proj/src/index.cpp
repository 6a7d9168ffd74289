#include "svoa/index.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_set>

namespace svoa {
namespace {

using nlohmann::json;

class LoadError : public Error {
 public:
  LoadError(const std::filesystem::path& path, std::size_t record, const std::string& what)
      : Error("index file " + path.string() + ": record " + std::to_string(record) + ": " +
              what) {}
};

json instance_to_json(const std::string& conv_id, const ComponentInstance& inst) {
  json j = {{"conv_id", conv_id}, {"kind", std::string(to_string(inst.kind))}, {"text", inst.text}};
  if (inst.source_message_index) j["source_message_index"] = *inst.source_message_index;
  if (inst.quadruplet_ref) j["quadruplet_ref"] = *inst.quadruplet_ref;
  j["vector"] = std::vector<double>(inst.embedding.values().begin(), inst.embedding.values().end());
  return j;
}

ComponentInstance instance_from_json(const json& j, std::size_t dimension) {
  ComponentInstance inst;
  inst.kind = parse_component_kind(j.at("kind").get<std::string>());
  inst.text = j.at("text").get<std::string>();
  if (j.contains("source_message_index")) {
    inst.source_message_index = j.at("source_message_index").get<std::size_t>();
  }
  if (j.contains("quadruplet_ref")) inst.quadruplet_ref = j.at("quadruplet_ref").get<std::string>();
  auto values = j.at("vector").get<std::vector<double>>();
  if (values.size() != dimension) {
    throw ContractViolation("vector has dimension " + std::to_string(values.size()) +
                            " but the manifest declares " + std::to_string(dimension));
  }
  inst.embedding = EmbeddingVector(std::move(values));
  validate(inst);
  return inst;
}

bool is_instance_record(const json& j) { return j.contains("kind") && j.contains("vector"); }
bool is_conversation_record(const json& j) { return j.contains("messages"); }
bool is_footer(const json& j) { return j.contains("end"); }

// Appends `text` to the kind's list unless already present.
void add_unique(ConversationEntry& entry, ComponentInstance inst,
                std::array<std::unordered_set<std::string>, kComponentKindCount>& seen) {
  if (!seen[to_index(inst.kind)].insert(inst.text).second) return;
  entry.of(inst.kind).push_back(std::move(inst));
}

}  // namespace

std::string make_quadruplet_ref(const std::string& conv_id, std::size_t n) {
  return conv_id + "#" + std::to_string(n);
}

SemanticIndexStore::SemanticIndexStore(IndexManifest manifest) : manifest_(std::move(manifest)) {
  if (manifest_.dimension == 0) throw ContractViolation("index manifest dimension must be positive");
}

const ConversationEntry* SemanticIndexStore::find(const std::string& conv_id) const {
  auto it = position_.find(conv_id);
  return it == position_.end() ? nullptr : &entries_[it->second];
}

void SemanticIndexStore::validate_entry(const ConversationEntry& entry) const {
  validate(entry.record);
  const std::string& id = entry.record.conv_id;
  if (entry.of(ComponentKind::Conversation).size() != 1) {
    throw ContractViolation("conversation '" + id + "' must have exactly one conv instance, has " +
                            std::to_string(entry.of(ComponentKind::Conversation).size()));
  }
  std::unordered_set<std::string> refs;
  for (const auto& q : entry.quadruplets) {
    if (!refs.insert(q.ref).second) {
      throw ContractViolation("conversation '" + id + "' has duplicate quadruplet ref " + q.ref);
    }
    if (q.quadruplet.source_message_index >= entry.record.messages.size()) {
      throw ContractViolation("quadruplet " + q.ref + " points past the last message");
    }
  }
  for (ComponentKind kind : kAllComponentKinds) {
    std::unordered_set<std::string> texts;
    for (const auto& inst : entry.of(kind)) {
      if (inst.kind != kind) {
        throw ContractViolation("conversation '" + id + "': instance filed under " +
                                std::string(to_string(kind)) + " has kind " +
                                std::string(to_string(inst.kind)));
      }
      validate(inst);
      if (inst.embedding.dimension() != manifest_.dimension) {
        throw ContractViolation("conversation '" + id + "': instance '" + inst.text +
                                "' has dimension " + std::to_string(inst.embedding.dimension()) +
                                ", index dimension is " + std::to_string(manifest_.dimension));
      }
      if (inst.quadruplet_ref && !refs.count(*inst.quadruplet_ref)) {
        throw ContractViolation("conversation '" + id + "': dangling quadruplet_ref " +
                                *inst.quadruplet_ref);
      }
      if (inst.source_message_index &&
          *inst.source_message_index >= entry.record.messages.size()) {
        throw ContractViolation("conversation '" + id + "': instance '" + inst.text +
                                "' points past the last message");
      }
      if (!texts.insert(inst.text).second) {
        throw ContractViolation("conversation '" + id + "': duplicate " +
                                std::string(to_string(kind)) + " text '" + inst.text + "'");
      }
    }
  }
}

void SemanticIndexStore::add(ConversationEntry entry) {
  if (manifest_.dimension == 0) throw ContractViolation("store has no manifest");
  if (position_.count(entry.record.conv_id)) {
    throw ContractViolation("duplicate conv_id '" + entry.record.conv_id + "'");
  }
  validate_entry(entry);
  position_.emplace(entry.record.conv_id, entries_.size());
  entries_.push_back(std::move(entry));
}

void SemanticIndexStore::remove_index(const std::string& quadruplet_ref) {
  const auto hash = quadruplet_ref.rfind('#');
  auto pos = hash == std::string::npos ? position_.end()
                                       : position_.find(quadruplet_ref.substr(0, hash));
  if (pos == position_.end()) throw Error("unknown quadruplet ref '" + quadruplet_ref + "'");
  ConversationEntry& entry = entries_[pos->second];

  auto qit = std::find_if(entry.quadruplets.begin(), entry.quadruplets.end(),
                          [&](const IndexedQuadruplet& q) { return q.ref == quadruplet_ref; });
  if (qit == entry.quadruplets.end()) {
    throw Error("unknown quadruplet ref '" + quadruplet_ref + "'");
  }
  entry.quadruplets.erase(qit);

  for (ComponentKind kind : {ComponentKind::SV, ComponentKind::SVO, ComponentKind::SVOA}) {
    auto& list = entry.of(kind);
    for (auto it = list.begin(); it != list.end();) {
      if (it->quadruplet_ref != quadruplet_ref) {
        ++it;
        continue;
      }
      auto heir = std::find_if(entry.quadruplets.begin(), entry.quadruplets.end(),
                               [&](const IndexedQuadruplet& q) {
                                 return render_component_text(q.quadruplet, kind) == it->text;
                               });
      if (heir != entry.quadruplets.end()) {
        it->quadruplet_ref = heir->ref;
        it->source_message_index = heir->quadruplet.source_message_index;
        ++it;
      } else {
        it = list.erase(it);
      }
    }
  }
}

ConversationEntry ingest_conversation(const ConversationRecord& conv, const IngestOptions& options,
                                      ChatBackend& chat, EmbeddingBackend& embedder,
                                      EmbeddingCache* cache) {
  validate(conv);
  WarningLog log;
  const auto quads = extract_conversation(conv, options.extraction, chat, log);

  ConversationEntry entry;
  entry.record = conv;
  entry.warnings = log.snapshot();
  std::stable_sort(entry.warnings.begin(), entry.warnings.end(),
                   [](const ExtractionWarning& a, const ExtractionWarning& b) {
                     return a.msg_index < b.msg_index;
                   });

  std::array<std::unordered_set<std::string>, kComponentKindCount> seen;
  add_unique(entry, {ComponentKind::Conversation, render_conversation_text(conv), {}, std::nullopt,
                     std::nullopt},
             seen);
  for (const Message& m : conv.messages) {
    add_unique(entry, {ComponentKind::Message, render_message_text(m), {}, m.index, std::nullopt},
               seen);
  }
  for (std::size_t n = 0; n < quads.size(); ++n) {
    IndexedQuadruplet iq{make_quadruplet_ref(conv.conv_id, n), quads[n]};
    for (ComponentKind kind : {ComponentKind::SV, ComponentKind::SVO, ComponentKind::SVOA}) {
      add_unique(entry,
                 {kind, render_component_text(iq.quadruplet, kind), {},
                  iq.quadruplet.source_message_index, iq.ref},
                 seen);
    }
    entry.quadruplets.push_back(std::move(iq));
  }

  std::vector<std::string> texts;
  for (const auto& list : entry.instances) {
    for (const auto& inst : list) texts.push_back(inst.text);
  }
  auto vectors = embed_texts(texts, embedder, cache, options.embed);
  std::size_t next = 0;
  for (auto& list : entry.instances) {
    for (auto& inst : list) inst.embedding = std::move(vectors[next++]);
  }
  return entry;
}

json manifest_to_json(const IndexManifest& m) {
  json j = {{"format_version", m.format_version},
            {"model_id", m.model_id},
            {"dimension", m.dimension},
            {"extraction_mode", std::string(to_string(m.extraction_mode))}};
  if (!m.created_at.empty()) j["created_at"] = m.created_at;
  return j;
}

IndexManifest manifest_from_json(const json& j) {
  IndexManifest m;
  m.format_version = j.at("format_version").get<int>();
  if (m.format_version != kIndexFormatVersion) {
    throw ContractViolation("unsupported index format_version " +
                            std::to_string(m.format_version) + " (this build reads version " +
                            std::to_string(kIndexFormatVersion) + ")");
  }
  m.model_id = j.at("model_id").get<std::string>();
  const auto dim = j.at("dimension").get<long long>();
  if (dim <= 0) throw ContractViolation("manifest dimension must be positive");
  m.dimension = static_cast<std::size_t>(dim);
  m.extraction_mode = parse_extraction_mode(j.at("extraction_mode").get<std::string>());
  m.created_at = j.value("created_at", "");
  return m;
}

std::vector<json> entry_to_records(const ConversationEntry& entry) {
  json messages = json::array();
  for (const auto& m : entry.record.messages) {
    messages.push_back({{"role", m.role}, {"text", m.text}});
  }
  json quads = json::array();
  for (const auto& iq : entry.quadruplets) {
    const auto& q = iq.quadruplet;
    json jq = {{"ref", iq.ref}, {"subject", q.subject}, {"verb", q.verb}, {"object", q.object}};
    if (q.adjunct) jq["adjunct"] = *q.adjunct;
    jq["source_message_index"] = q.source_message_index;
    quads.push_back(std::move(jq));
  }
  json warnings = json::array();
  for (const auto& w : entry.warnings) {
    warnings.push_back({{"msg_index", w.msg_index},
                        {"stage", w.stage},
                        {"reason", w.reason},
                        {"raw_text", w.raw_text}});
  }
  std::vector<json> out;
  out.push_back({{"conv_id", entry.record.conv_id},
                 {"messages", messages},
                 {"quadruplets", quads},
                 {"warnings", warnings}});
  for (const auto& list : entry.instances) {
    for (const auto& inst : list) out.push_back(instance_to_json(entry.record.conv_id, inst));
  }
  return out;
}

ConversationEntry entry_from_records(std::span<const json> records, std::size_t dimension) {
  if (records.empty() || !is_conversation_record(records.front())) {
    throw ContractViolation("expected a conversation record");
  }
  const json& head = records.front();
  ConversationEntry entry;
  entry.record.conv_id = head.at("conv_id").get<std::string>();
  for (const auto& m : head.at("messages")) {
    entry.record.messages.push_back(
        {entry.record.messages.size(), m.at("role").get<std::string>(), m.at("text").get<std::string>()});
  }
  for (const auto& jq : head.value("quadruplets", json::array())) {
    IndexedQuadruplet iq;
    iq.ref = jq.at("ref").get<std::string>();
    iq.quadruplet.subject = jq.at("subject").get<std::string>();
    iq.quadruplet.verb = jq.at("verb").get<std::string>();
    iq.quadruplet.object = jq.at("object").get<std::string>();
    if (jq.contains("adjunct")) iq.quadruplet.adjunct = jq.at("adjunct").get<std::string>();
    iq.quadruplet.source_message_index = jq.at("source_message_index").get<std::size_t>();
    entry.quadruplets.push_back(std::move(iq));
  }
  for (const auto& jw : head.value("warnings", json::array())) {
    entry.warnings.push_back({entry.record.conv_id, jw.at("msg_index").get<std::size_t>(),
                              jw.at("stage").get<std::string>(), jw.value("reason", ""),
                              jw.value("raw_text", "")});
  }
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].at("conv_id").get<std::string>() != entry.record.conv_id) {
      throw ContractViolation("instance record belongs to conversation '" +
                              records[i].at("conv_id").get<std::string>() + "'");
    }
    auto inst = instance_from_json(records[i], dimension);
    entry.of(inst.kind).push_back(std::move(inst));
  }
  return entry;
}

void persist(const SemanticIndexStore& store, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write index file " + tmp.string());
    out << manifest_to_json(store.manifest()).dump() << '\n';
    std::size_t instances = 0;
    for (const auto& entry : store.entries()) {
      for (const auto& rec : entry_to_records(entry)) out << rec.dump() << '\n';
      for (const auto& list : entry.instances) instances += list.size();
    }
    out << json{{"end", true}, {"conversations", store.size()}, {"instances", instances}}.dump()
        << '\n';
    out.flush();
    if (!out) throw Error("failed writing index file " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

SemanticIndexStore load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open index file " + path.string());

  std::string line;
  std::size_t record_no = 0;
  auto next_record = [&]() -> std::optional<json> {
    while (std::getline(in, line)) {
      ++record_no;
      if (trim(line).empty()) continue;
      auto j = json::parse(line, nullptr, /*allow_exceptions=*/false);
      if (j.is_discarded() || !j.is_object()) {
        throw LoadError(path, record_no, "malformed JSON (file truncated or corrupted)");
      }
      return j;
    }
    return std::nullopt;
  };

  auto first = next_record();
  if (!first) throw LoadError(path, 1, "missing manifest (empty file)");
  SemanticIndexStore store = [&] {
    try {
      return SemanticIndexStore(manifest_from_json(*first));
    } catch (const std::exception& e) {
      throw LoadError(path, record_no, std::string("bad manifest: ") + e.what());
    }
  }();

  std::vector<json> pending;
  std::size_t pending_start = 0;
  std::size_t instance_count = 0;
  auto flush = [&] {
    if (pending.empty()) return;
    try {
      auto entry = entry_from_records(pending, store.manifest().dimension);
      store.add(std::move(entry));
    } catch (const std::exception& e) {
      throw LoadError(path, pending_start, e.what());
    }
    pending.clear();
  };

  bool saw_footer = false;
  while (auto rec = next_record()) {
    if (saw_footer) throw LoadError(path, record_no, "data after end-of-index footer");
    try {
      if (is_footer(*rec)) {
        flush();
        saw_footer = true;
        const auto convs = rec->at("conversations").get<std::size_t>();
        const auto insts = rec->at("instances").get<std::size_t>();
        if (convs != store.size() || insts != instance_count) {
          throw ContractViolation("footer counts (" + std::to_string(convs) + " conversations, " +
                                  std::to_string(insts) + " instances) do not match contents (" +
                                  std::to_string(store.size()) + ", " +
                                  std::to_string(instance_count) + ")");
        }
      } else if (is_conversation_record(*rec)) {
        flush();
        pending_start = record_no;
        pending.push_back(std::move(*rec));
      } else if (is_instance_record(*rec)) {
        if (pending.empty()) throw ContractViolation("instance record before any conversation");
        if (rec->at("vector").size() != store.manifest().dimension) {
          throw ContractViolation("vector has dimension " + std::to_string(rec->at("vector").size()) +
                                  " but the manifest declares " +
                                  std::to_string(store.manifest().dimension));
        }
        ++instance_count;
        pending.push_back(std::move(*rec));
      } else {
        throw ContractViolation("unrecognized record");
      }
    } catch (const LoadError&) {
      throw;
    } catch (const std::exception& e) {
      throw LoadError(path, record_no, e.what());
    }
  }
  if (!saw_footer) {
    throw LoadError(path, record_no + 1, "missing end-of-index footer (file truncated)");
  }
  return store;
}

IndexStats stats(const SemanticIndexStore& store) {
  IndexStats s;
  s.conversations = store.size();
  for (const auto& entry : store.entries()) {
    IndexStats::PerConversation pc;
    pc.conv_id = entry.record.conv_id;
    for (ComponentKind k : kAllComponentKinds) {
      pc.counts[to_index(k)] = entry.of(k).size();
      s.instances[to_index(k)] += entry.of(k).size();
    }
    pc.quadruplets = entry.quadruplets.size();
    pc.warnings = entry.warnings.size();
    s.messages += entry.record.messages.size();
    s.quadruplets += pc.quadruplets;
    s.warnings += pc.warnings;
    s.per_conversation.push_back(std::move(pc));
  }
  return s;
}

json stats_to_json(const IndexStats& s, bool include_per_conversation) {
  json instances = json::object();
  for (ComponentKind k : kAllComponentKinds) {
    instances[std::string(to_string(k))] = s.instances[to_index(k)];
  }
  json j = {{"conversations", s.conversations},
            {"messages", s.messages},
            {"quadruplets", s.quadruplets},
            {"instances", instances},
            {"warnings", s.warnings}};
  if (include_per_conversation) {
    json per = json::array();
    for (const auto& pc : s.per_conversation) {
      json counts = json::object();
      for (ComponentKind k : kAllComponentKinds) {
        counts[std::string(to_string(k))] = pc.counts[to_index(k)];
      }
      per.push_back({{"conv_id", pc.conv_id},
                     {"instances", counts},
                     {"quadruplets", pc.quadruplets},
                     {"warnings", pc.warnings}});
    }
    j["per_conversation"] = per;
  }
  return j;
}

}  // namespace svoa
