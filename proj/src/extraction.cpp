#include "svoa/extraction.hpp"

#include <map>
#include <optional>
#include <set>
#include <tuple>

#include "svoa/json_payload.hpp"
#include "svoa/parallel.hpp"

namespace svoa {
namespace {

using nlohmann::json;

constexpr std::string_view kTripletKey = "information_triplet";
constexpr std::string_view kAdjunctKey = "detailed_information";
constexpr std::string_view kQuadrupletKey = "information_quadruplet";

std::map<std::string, std::string> message_vars(const ConversationRecord& conv,
                                                std::size_t msg_index,
                                                const ExtractionConfig& cfg) {
  const Message& m = conv.messages.at(msg_index);
  return {
      {"role", m.role},
      {"context", build_context_window(conv, msg_index, cfg.context_window_k)},
      {"message", m.text},
  };
}

ChatRequest make_request(const PromptTemplate& tmpl, const std::map<std::string, std::string>& vars,
                         const ExtractionConfig& cfg) {
  ChatRequest req;
  req.system_prompt = fill_template(tmpl.system, vars);
  req.few_shot = tmpl.few_shot;
  req.user_message = fill_template(tmpl.user, vars);
  req.temperature = cfg.temperature;
  req.max_tokens = cfg.max_tokens;
  return req;
}

// Asks the backend until the reply carries a JSON array under `key`.
// Returns nullopt after 1 + max_parse_retries failed attempts.
std::optional<json> request_payload(ChatBackend& backend, const ChatRequest& req,
                                    std::string_view key, const ExtractionConfig& cfg,
                                    std::string& last_raw, std::string& reason) {
  for (std::size_t attempt = 0; attempt <= cfg.max_parse_retries; ++attempt) {
    last_raw = backend.complete(req);
    auto payload = parse_json_payload(last_raw);
    if (!payload) {
      reason = "no JSON object in response";
      continue;
    }
    auto it = payload->find(std::string(key));
    if (it == payload->end()) {
      reason = "response lacks \"" + std::string(key) + "\"";
      continue;
    }
    if (!it->is_array()) {
      reason = "\"" + std::string(key) + "\" is not an array";
      continue;
    }
    return *it;
  }
  return std::nullopt;
}

// Splits "<role> <verb...>" into the verb part; nullopt when the key does not
// start with the role as a whole word.
std::optional<std::string> verb_from_key(std::string_view key, std::string_view role) {
  const std::string normalized = normalize_whitespace(key);
  const std::string norm_role = normalize_whitespace(role);
  if (!istarts_with(normalized, norm_role)) return std::nullopt;
  if (normalized.size() == norm_role.size()) return std::string();
  if (normalized[norm_role.size()] != ' ') return std::nullopt;
  return normalized.substr(norm_role.size() + 1);
}

std::vector<std::string> strings_of(const json& value) {
  std::vector<std::string> out;
  if (value.is_string()) {
    out.push_back(value.get<std::string>());
  } else if (value.is_array()) {
    for (const auto& v : value) {
      if (v.is_string()) out.push_back(v.get<std::string>());
    }
  }
  return out;
}

std::optional<std::string> clean_adjunct(const json& value) {
  if (!value.is_string()) return std::nullopt;
  std::string detail = normalize_whitespace(value.get<std::string>());
  while (!detail.empty() && detail.back() == '.') detail.pop_back();
  detail = trim(detail);
  if (detail.empty() || iequals(detail, "no information")) return std::nullopt;
  return detail;
}

using DedupKey = std::tuple<std::string, std::string, std::string>;

DedupKey dedup_key(std::string_view verb, std::string_view object, std::string_view adjunct) {
  return {to_lower(verb), to_lower(object), to_lower(adjunct)};
}

std::string triplet_text(const SvoTriplet& t) { return t.subject + " " + t.verb + " " + t.object; }

}  // namespace

std::string_view to_string(ExtractionMode mode) {
  return mode == ExtractionMode::TwoStep ? "two-step" : "single-step";
}

ExtractionMode parse_extraction_mode(std::string_view name) {
  const std::string lower = to_lower(trim(name));
  if (lower == "two-step" || lower == "two_step" || lower == "twostep") {
    return ExtractionMode::TwoStep;
  }
  if (lower == "single-step" || lower == "single_step" || lower == "singlestep") {
    return ExtractionMode::SingleStep;
  }
  throw ContractViolation("unknown extraction mode '" + std::string(name) +
                          "' (expected two-step or single-step)");
}

void WarningLog::add(ExtractionWarning warning) {
  std::lock_guard lock(mutex_);
  warnings_.push_back(std::move(warning));
}

std::vector<ExtractionWarning> WarningLog::snapshot() const {
  std::lock_guard lock(mutex_);
  return warnings_;
}

std::size_t WarningLog::size() const {
  std::lock_guard lock(mutex_);
  return warnings_.size();
}

std::string build_context_window(const ConversationRecord& conv, std::size_t msg_index,
                                  std::size_t k) {
  if (msg_index >= conv.messages.size()) {
    throw ContractViolation("build_context_window: message index " + std::to_string(msg_index) +
                            " out of range for conversation '" + conv.conv_id + "' with " +
                            std::to_string(conv.messages.size()) + " messages");
  }
  const std::size_t first = msg_index > k ? msg_index - k : 0;
  std::string out;
  for (std::size_t i = first; i < msg_index; ++i) {
    if (!out.empty()) out += '\n';
    out += render_message_text(conv.messages[i]);
  }
  return out;
}

std::string render_info_list(std::span<const SvoTriplet> triplets) {
  std::string out;
  for (const auto& t : triplets) {
    if (!out.empty()) out += '\n';
    out += triplet_text(t);
  }
  return out;
}

std::vector<SvoTriplet> extract_triplets(const ConversationRecord& conv, std::size_t msg_index,
                                         const ExtractionConfig& cfg, ChatBackend& backend,
                                         WarningLog& warnings, const PromptSet& prompts) {
  const Message& msg = conv.messages.at(msg_index);
  const ChatRequest req = make_request(prompts.triplets, message_vars(conv, msg_index, cfg), cfg);

  std::string raw;
  std::string reason;
  auto items = request_payload(backend, req, kTripletKey, cfg, raw, reason);
  if (!items) {
    warnings.add({conv.conv_id, msg_index, "triplets", reason, raw});
    return {};
  }

  std::vector<SvoTriplet> out;
  std::set<DedupKey> seen;
  for (const auto& element : *items) {
    if (!element.is_object()) continue;
    for (const auto& [key, value] : element.items()) {
      auto verb = verb_from_key(key, msg.role);
      if (!verb || verb->empty()) continue;
      for (const auto& object_text : strings_of(value)) {
        std::string object = normalize_whitespace(object_text);
        if (object.empty()) continue;
        if (!seen.insert(dedup_key(*verb, object, "")).second) continue;
        out.push_back({msg.role, *verb, std::move(object), msg_index});
      }
    }
  }
  return out;
}

std::vector<SvoaQuadruplet> augment_adjuncts(const ConversationRecord& conv,
                                             std::size_t msg_index,
                                             std::span<const SvoTriplet> triplets,
                                             const ExtractionConfig& cfg, ChatBackend& backend,
                                             WarningLog& warnings, const PromptSet& prompts) {
  std::vector<SvoaQuadruplet> out;
  out.reserve(triplets.size());
  for (const auto& t : triplets) {
    out.push_back({t.subject, t.verb, t.object, std::nullopt, t.source_message_index});
  }
  if (triplets.empty()) return out;

  auto vars = message_vars(conv, msg_index, cfg);
  vars["info_list"] = render_info_list(triplets);
  const ChatRequest req = make_request(prompts.adjuncts, vars, cfg);

  std::string raw;
  std::string reason;
  auto items = request_payload(backend, req, kAdjunctKey, cfg, raw, reason);
  if (!items) {
    warnings.add({conv.conv_id, msg_index, "adjuncts", reason, raw});
    return out;
  }

  std::map<std::string, json> exact;
  std::map<std::string, json> folded;
  for (const auto& element : *items) {
    if (!element.is_object()) continue;
    for (const auto& [key, value] : element.items()) {
      const std::string norm = normalize_whitespace(key);
      exact.emplace(norm, value);
      folded.emplace(to_lower(norm), value);
    }
  }
  for (auto& q : out) {
    const std::string key = normalize_whitespace(render_component_text(q, ComponentKind::SVO));
    const json* detail = nullptr;
    if (auto it = exact.find(key); it != exact.end()) {
      detail = &it->second;
    } else if (auto it2 = folded.find(to_lower(key)); it2 != folded.end()) {
      detail = &it2->second;
    }
    if (detail) q.adjunct = clean_adjunct(*detail);
  }
  return out;
}

std::vector<SvoaQuadruplet> extract_single_step(const ConversationRecord& conv,
                                                std::size_t msg_index,
                                                const ExtractionConfig& cfg,
                                                ChatBackend& backend, WarningLog& warnings,
                                                const PromptSet& prompts) {
  if (cfg.mode != ExtractionMode::SingleStep) {
    throw ContractViolation("extract_single_step requires mode single-step");
  }
  const Message& msg = conv.messages.at(msg_index);
  const ChatRequest req =
      make_request(prompts.single_step, message_vars(conv, msg_index, cfg), cfg);

  std::string raw;
  std::string reason;
  auto items = request_payload(backend, req, kQuadrupletKey, cfg, raw, reason);
  if (!items) {
    warnings.add({conv.conv_id, msg_index, "single_step", reason, raw});
    return {};
  }

  std::vector<SvoaQuadruplet> out;
  std::set<DedupKey> seen;
  for (const auto& element : *items) {
    if (!element.is_object()) continue;
    for (const auto& [key, value] : element.items()) {
      auto verb = verb_from_key(key, msg.role);
      if (!verb || verb->empty()) continue;
      std::string object;
      std::optional<std::string> adjunct;
      if (value.is_string()) {
        object = normalize_whitespace(value.get<std::string>());
      } else if (value.is_array() && !value.empty() && value[0].is_string()) {
        object = normalize_whitespace(value[0].get<std::string>());
        if (value.size() > 1) adjunct = clean_adjunct(value[1]);
      }
      if (object.empty()) continue;
      if (!seen.insert(dedup_key(*verb, object, adjunct.value_or(""))).second) continue;
      out.push_back({msg.role, *verb, std::move(object), std::move(adjunct), msg_index});
    }
  }
  return out;
}

std::vector<SvoaQuadruplet> extract_message(const ConversationRecord& conv, std::size_t msg_index,
                                            const ExtractionConfig& cfg, ChatBackend& backend,
                                            WarningLog& warnings, const PromptSet& prompts) {
  if (cfg.mode == ExtractionMode::SingleStep) {
    return extract_single_step(conv, msg_index, cfg, backend, warnings, prompts);
  }
  const auto triplets = extract_triplets(conv, msg_index, cfg, backend, warnings, prompts);
  return augment_adjuncts(conv, msg_index, triplets, cfg, backend, warnings, prompts);
}

std::vector<SvoaQuadruplet> extract_conversation(const ConversationRecord& conv,
                                                 const ExtractionConfig& cfg,
                                                 ChatBackend& backend, WarningLog& warnings,
                                                 const PromptSet& prompts) {
  std::vector<std::vector<SvoaQuadruplet>> per_message(conv.messages.size());
  parallel_for(conv.messages.size(), cfg.message_workers, [&](std::size_t i) {
    per_message[i] = extract_message(conv, i, cfg, backend, warnings, prompts);
  });
  std::vector<SvoaQuadruplet> out;
  for (auto& batch : per_message) {
    for (auto& q : batch) out.push_back(std::move(q));
  }
  return out;
}

}  // namespace svoa
