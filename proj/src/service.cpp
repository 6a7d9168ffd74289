#include "svoa/service.hpp"

#include <mutex>

#include "svoa/eval.hpp"

namespace svoa {
namespace {

using nlohmann::json;

ServiceResponse error_response(int status, const std::string& message) {
  return {status, {{"error", message}}};
}

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ContractViolation(std::string("request body is not valid JSON: ") + e.what());
  }
}

}  // namespace

QueryRequest parse_query_request(const json& body) {
  if (!body.is_object()) throw ContractViolation("request body must be a JSON object");
  for (const auto& [key, _] : body.items()) {
    if (key != "text" && key != "top_k" && key != "combination" && key != "weights" &&
        key != "bm25_weight") {
      throw ContractViolation("unknown field '" + key + "'");
    }
  }
  QueryRequest req;
  if (!body.contains("text") || !body["text"].is_string()) {
    throw ContractViolation("'text' must be a string");
  }
  req.text = body["text"].get<std::string>();
  if (trim(req.text).empty()) throw ContractViolation("'text' must not be empty");
  if (body.contains("top_k")) {
    if (!body["top_k"].is_number_unsigned() || body["top_k"].get<std::size_t>() == 0) {
      throw ContractViolation("'top_k' must be a positive integer");
    }
    req.top_k = body["top_k"].get<std::size_t>();
  }
  if (body.contains("combination")) {
    if (!body["combination"].is_string()) throw ContractViolation("'combination' must be a string");
    req.combination = body["combination"].get<std::string>();
  }
  if (body.contains("weights")) {
    const auto& w = body["weights"];
    if (!w.is_object()) throw ContractViolation("'weights' must be an object of kind -> number");
    std::array<double, kComponentKindCount> weights{1.0, 1.0, 1.0, 1.0, 1.0};
    for (const auto& [name, value] : w.items()) {
      if (!value.is_number()) throw ContractViolation("weight '" + name + "' must be a number");
      weights[to_index(parse_component_kind(name))] = value.get<double>();
    }
    req.weights = weights;
  }
  if (body.contains("bm25_weight")) {
    if (!body["bm25_weight"].is_number()) throw ContractViolation("'bm25_weight' must be a number");
    req.bm25_weight = body["bm25_weight"].get<double>();
  }
  return req;
}

json breakdown_to_json(const ScoreBreakdown& b, const std::string& best_svoa) {
  json scores = json::object();
  json weights = json::object();
  json best = json::object();
  for (ComponentKind k : b.active.kinds()) {
    const std::string name(to_string(k));
    scores[name] = b.scores[to_index(k)];
    weights[name] = b.weights[to_index(k)];
    best[name] = b.best_text[to_index(k)];
  }
  json j = {{"conv_id", b.conv_id},
            {"total", b.total},
            {"scores", scores},
            {"weights", weights},
            {"best_text", best},
            {"best_svoa", best_svoa}};
  if (b.bm25) {
    j["bm25"] = *b.bm25;
    j["bm25_weight"] = b.bm25_weight;
  }
  return j;
}

QueryService::QueryService(SemanticIndexStore store, std::unique_ptr<EmbeddingBackend> backend,
                           AppConfig config, EmbeddingCache* cache,
                           std::ptrdiff_t max_concurrent_embeddings)
    : store_(std::move(store)),
      backend_(std::move(backend)),
      config_(std::move(config)),
      cache_(cache),
      embed_slots_(std::max<std::ptrdiff_t>(1, max_concurrent_embeddings)) {
  if (!backend_) throw ContractViolation("query service needs an embedding backend");
  if (!store_.empty() && backend_->model_id() != store_.manifest().model_id) {
    throw ContractViolation("embedding backend '" + backend_->model_id() +
                            "' does not match index model '" + store_.manifest().model_id + "'");
  }
  if (!store_.empty()) bm25_ = std::make_unique<Bm25Index>(store_);
}

EmbeddingVector QueryService::embed_query(const std::string& text) {
  embed_slots_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{embed_slots_};
  const std::string texts[] = {text};
  return embed_texts(texts, *backend_, cache_, config_.embed_options()).front();
}

json QueryService::query(const QueryRequest& request) {
  ScoringConfig cfg = config_.scoring_config();
  std::string combo = config_.scoring.combination;
  if (request.combination) {
    combo = *request.combination;
    cfg.active = combination(combo);
  }
  if (request.weights) cfg.weights = *request.weights;
  if (request.bm25_weight) cfg.bm25_weight = *request.bm25_weight;
  cfg.validate();
  if (request.top_k == 0) throw ContractViolation("top_k must be >= 1");
  if (trim(request.text).empty()) throw ContractViolation("query text must not be empty");

  const EmbeddingVector q = embed_query(request.text);

  std::shared_lock lock(mutex_);
  std::vector<double> bm25;
  RankOptions options;
  options.top_k = request.top_k;
  options.workers = config_.workers;
  if (cfg.bm25_weight != 0.0 && bm25_) {
    bm25 = bm25_->scores(request.text);
    options.bm25 = bm25;
  }
  const auto ranked = rank_conversations(q, store_, cfg, options);
  json results = json::array();
  for (const auto& b : ranked) {
    std::string best_svoa = b.best_text[to_index(ComponentKind::SVOA)];
    if (!b.active.contains(ComponentKind::SVOA)) {
      const auto* entry = store_.find(b.conv_id);
      const auto s = component_scores(q, *entry, {ComponentKind::SVOA}, Aggregation::Max, 0.0);
      const auto* inst = s.best[to_index(ComponentKind::SVOA)];
      best_svoa = inst ? inst->text : std::string();
    }
    results.push_back(breakdown_to_json(b, best_svoa));
  }
  return {{"query", request.text}, {"combination", combo}, {"results", std::move(results)}};
}

std::optional<ServiceResponse> QueryService::unavailable() const {
  if (reloading_.load()) return error_response(503, "index is reloading");
  return std::nullopt;
}

ServiceResponse QueryService::handle_healthz() const {
  if (auto r = unavailable()) return *r;
  return {200, {{"status", "ok"}}};
}

ServiceResponse QueryService::handle_query(const std::string& body) {
  if (auto r = unavailable()) return *r;
  try {
    return {200, query(parse_query_request(parse_body(body)))};
  } catch (const ContractViolation& e) {
    return error_response(400, e.what());
  } catch (const BackendError& e) {
    return error_response(502, e.what());
  }
}

ServiceResponse QueryService::handle_conversation(const std::string& conv_id) {
  if (auto r = unavailable()) return *r;
  std::shared_lock lock(mutex_);
  const auto* entry = store_.find(conv_id);
  if (!entry) return error_response(404, "unknown conversation '" + conv_id + "'");
  json records = json::array();
  for (auto& rec : entry_to_records(*entry)) {
    if (rec.contains("vector")) rec.erase("vector");
    records.push_back(std::move(rec));
  }
  json out = records.front();
  json instances = json::array();
  for (std::size_t i = 1; i < records.size(); ++i) instances.push_back(records[i]);
  out["instances"] = std::move(instances);
  return {200, out};
}

ServiceResponse QueryService::handle_stats() {
  if (auto r = unavailable()) return *r;
  std::shared_lock lock(mutex_);
  json out = stats_to_json(stats(store_));
  out["model_id"] = store_.manifest().model_id;
  return {200, out};
}

ServiceResponse QueryService::handle_remove(const std::string& body) {
  if (auto r = unavailable()) return *r;
  std::string ref;
  try {
    const json j = parse_body(body);
    if (!j.is_object() || !j.contains("quadruplet_ref") || !j["quadruplet_ref"].is_string()) {
      return error_response(400, "body must be {\"quadruplet_ref\": \"<conv_id>#<n>\"}");
    }
    ref = j["quadruplet_ref"].get<std::string>();
  } catch (const ContractViolation& e) {
    return error_response(400, e.what());
  }
  std::unique_lock lock(mutex_);
  try {
    store_.remove_index(ref);
  } catch (const ContractViolation& e) {
    return error_response(400, e.what());
  } catch (const Error& e) {
    return error_response(404, e.what());
  }
  return {200, {{"removed", ref}}};
}

void QueryService::reload(SemanticIndexStore store) {
  reloading_ = true;
  {
    std::unique_lock lock(mutex_);
    store_ = std::move(store);
    bm25_ = store_.empty() ? nullptr : std::make_unique<Bm25Index>(store_);
  }
  reloading_ = false;
}

}  // namespace svoa
