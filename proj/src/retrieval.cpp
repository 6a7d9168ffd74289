#include "svoa/retrieval.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include "svoa/parallel.hpp"

namespace svoa {
namespace {

// Label order of the reference tables: sv, svo, svoa, conv, msg.
constexpr std::array<ComponentKind, kComponentKindCount> kLabelOrder = {
    ComponentKind::SV, ComponentKind::SVO, ComponentKind::SVOA, ComponentKind::Conversation,
    ComponentKind::Message};

const std::vector<std::pair<std::string, ComponentSet>>& named_combinations() {
  using K = ComponentKind;
  static const std::vector<std::pair<std::string, ComponentSet>> table = {
      {"sv", {K::SV}},
      {"sv_svo", {K::SV, K::SVO}},
      {"sv_svo_svoa", {K::SV, K::SVO, K::SVOA}},
      {"svoa_conv_msg", {K::SVOA, K::Conversation, K::Message}},
      {"svo_svoa_conv_msg", {K::SVO, K::SVOA, K::Conversation, K::Message}},
      {"sv_svo_svoa_conv_msg", {K::SV, K::SVO, K::SVOA, K::Conversation, K::Message}},
  };
  return table;
}

bool ranks_before(double total_a, const std::string& id_a, double total_b,
                  const std::string& id_b) {
  if (total_a != total_b) return total_a > total_b;
  return id_a < id_b;
}

}  // namespace

bool ComponentSet::empty() const { return size() == 0; }

std::size_t ComponentSet::size() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
}

std::vector<ComponentKind> ComponentSet::kinds() const {
  std::vector<ComponentKind> out;
  for (ComponentKind k : kAllComponentKinds) {
    if (contains(k)) out.push_back(k);
  }
  return out;
}

std::string to_string(const ComponentSet& set) {
  std::string out;
  for (ComponentKind k : kLabelOrder) {
    if (!set.contains(k)) continue;
    if (!out.empty()) out += '_';
    out += to_string(k);
  }
  return out;
}

const std::vector<std::string>& combination_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, set] : named_combinations()) out.push_back(name);
    return out;
  }();
  return names;
}

ComponentSet combination(std::string_view name) {
  for (const auto& [n, set] : named_combinations()) {
    if (n == name) return set;
  }
  std::string valid;
  for (const auto& n : combination_names()) {
    if (!valid.empty()) valid += ", ";
    valid += n;
  }
  throw ContractViolation("unknown combination '" + std::string(name) + "'; valid names: " + valid);
}

ComponentSet parse_component_list(std::string_view list) {
  ComponentSet set;
  std::string current;
  auto flush = [&] {
    if (!trim(current).empty()) set.insert(parse_component_kind(current));
    current.clear();
  };
  for (char c : list) {
    if (c == ',' || c == '_' || c == '+' || c == ' ') {
      flush();
    } else {
      current += c;
    }
  }
  flush();
  if (set.empty()) throw ContractViolation("component list '" + std::string(list) + "' is empty");
  return set;
}

std::string_view to_string(Aggregation a) {
  switch (a) {
    case Aggregation::Max:
      return "max";
    case Aggregation::Sum:
      return "sum";
    case Aggregation::Avg:
      return "avg";
  }
  return "max";
}

Aggregation parse_aggregation(std::string_view name) {
  const std::string lower = to_lower(trim(name));
  if (lower == "max") return Aggregation::Max;
  if (lower == "sum") return Aggregation::Sum;
  if (lower == "avg" || lower == "mean") return Aggregation::Avg;
  throw ContractViolation("unknown aggregation '" + std::string(name) + "' (max, sum, avg)");
}

void ScoringConfig::validate() const {
  if (active.empty()) throw ContractViolation("scoring config has no active components");
  for (ComponentKind k : kAllComponentKinds) {
    if (!(weights[to_index(k)] >= 0.0)) {
      throw ContractViolation("weight for " + std::string(to_string(k)) + " must be >= 0");
    }
  }
  if (!(bm25_weight >= 0.0)) throw ContractViolation("bm25_weight must be >= 0");
}

ComponentScores component_scores(const EmbeddingVector& query, const ConversationEntry& entry,
                                 const ComponentSet& kinds, Aggregation aggregation,
                                 double missing_score) {
  ComponentScores out;
  for (ComponentKind k : kAllComponentKinds) {
    if (!kinds.contains(k)) continue;
    const auto& list = entry.of(k);
    const std::size_t slot = to_index(k);
    if (list.empty()) {
      out.scores[slot] = missing_score;
      continue;
    }
    double best = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    const ComponentInstance* best_inst = nullptr;
    for (const auto& inst : list) {
      const double s = cosine_similarity(query, inst.embedding);
      sum += s;
      if (s > best) {
        best = s;
        best_inst = &inst;
      }
    }
    out.best[slot] = best_inst;
    switch (aggregation) {
      case Aggregation::Max:
        out.scores[slot] = best;
        break;
      case Aggregation::Sum:
        out.scores[slot] = sum;
        break;
      case Aggregation::Avg:
        out.scores[slot] = sum / static_cast<double>(list.size());
        break;
    }
  }
  return out;
}

double combine_scores(const std::array<double, kComponentKindCount>& scores,
                      const ScoringConfig& cfg, double bm25) {
  double total = 0.0;
  for (ComponentKind k : kAllComponentKinds) {
    if (cfg.active.contains(k)) total += cfg.weight(k) * scores[to_index(k)];
  }
  if (cfg.bm25_weight != 0.0) total += cfg.bm25_weight * bm25;
  return total;
}

namespace {

ScoreBreakdown make_breakdown(const ConversationEntry& entry, const ComponentScores& cs,
                              const ScoringConfig& cfg, std::optional<double> bm25) {
  ScoreBreakdown b;
  b.conv_id = entry.record.conv_id;
  b.active = cfg.active;
  b.weights = cfg.weights;
  b.scores = cs.scores;
  for (std::size_t i = 0; i < kComponentKindCount; ++i) {
    if (cs.best[i]) b.best_text[i] = cs.best[i]->text;
  }
  b.bm25 = bm25;
  b.bm25_weight = cfg.bm25_weight;
  b.total = combine_scores(cs.scores, cfg, bm25.value_or(0.0));
  return b;
}

}  // namespace

ScoreBreakdown score_conversation(const EmbeddingVector& query, const ConversationEntry& entry,
                                  const ScoringConfig& cfg) {
  cfg.validate();
  const auto cs =
      component_scores(query, entry, cfg.active, cfg.aggregation, cfg.missing_component_score);
  return make_breakdown(entry, cs, cfg, std::nullopt);
}

std::vector<ScoreBreakdown> rank_conversations(const EmbeddingVector& query,
                                               const SemanticIndexStore& store,
                                               const ScoringConfig& cfg,
                                               const RankOptions& options) {
  cfg.validate();
  if (options.top_k == 0) throw ContractViolation("top_k must be >= 1");
  if (store.empty()) return {};
  if (query.dimension() != store.manifest().dimension) {
    throw ContractViolation("query dimension " + std::to_string(query.dimension()) +
                            " does not match index dimension " +
                            std::to_string(store.manifest().dimension));
  }
  const bool hybrid = cfg.bm25_weight != 0.0;
  if (hybrid && options.bm25.size() != store.size()) {
    throw ContractViolation("bm25_weight > 0 requires BM25 scores for every conversation");
  }

  const auto& entries = store.entries();
  std::vector<ComponentScores> scored(entries.size());
  std::vector<double> totals(entries.size());
  parallel_for(entries.size(), options.workers, [&](std::size_t i) {
    scored[i] = component_scores(query, entries[i], cfg.active, cfg.aggregation,
                                 cfg.missing_component_score);
    totals[i] = combine_scores(scored[i].scores, cfg, hybrid ? options.bm25[i] : 0.0);
  });

  std::vector<std::size_t> order(entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t k = std::min(options.top_k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return ranks_before(totals[a], entries[a].record.conv_id, totals[b],
                                          entries[b].record.conv_id);
                    });

  std::vector<ScoreBreakdown> out;
  out.reserve(k);
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t i = order[r];
    out.push_back(make_breakdown(entries[i], scored[i], cfg,
                                 hybrid ? std::optional<double>(options.bm25[i]) : std::nullopt));
  }
  return out;
}

std::vector<EnsembleScore> ensemble_scores(std::span<const EmbeddingVector> queries,
                                           std::span<const SemanticIndexStore* const> stores,
                                           const ScoringConfig& cfg,
                                           std::span<const double> bm25) {
  cfg.validate();
  if (stores.empty()) throw ContractViolation("ensemble needs at least one store");
  if (queries.size() != stores.size()) {
    throw ContractViolation("ensemble needs one query embedding per store");
  }
  const SemanticIndexStore& base = *stores[0];
  std::set<std::string> base_ids;
  for (const auto& e : base.entries()) base_ids.insert(e.record.conv_id);
  for (std::size_t s = 1; s < stores.size(); ++s) {
    std::set<std::string> ids;
    for (const auto& e : stores[s]->entries()) ids.insert(e.record.conv_id);
    if (ids == base_ids) continue;
    std::string missing;
    std::string extra;
    for (const auto& id : base_ids) {
      if (!ids.count(id)) missing += (missing.empty() ? "" : ", ") + id;
    }
    for (const auto& id : ids) {
      if (!base_ids.count(id)) extra += (extra.empty() ? "" : ", ") + id;
    }
    throw ContractViolation("ensemble store " + std::to_string(s) +
                            " covers different conversations than store 0; missing: [" + missing +
                            "], extra: [" + extra + "]");
  }
  const bool hybrid = cfg.bm25_weight != 0.0;
  if (hybrid && bm25.size() != base.size()) {
    throw ContractViolation("bm25_weight > 0 requires BM25 scores for every conversation");
  }

  ScoringConfig no_bm25 = cfg;
  no_bm25.bm25_weight = 0.0;
  std::vector<EnsembleScore> out;
  out.reserve(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    const std::string& id = base.entries()[i].record.conv_id;
    EnsembleScore es;
    es.conv_id = id;
    for (std::size_t s = 0; s < stores.size(); ++s) {
      const ConversationEntry* entry = s == 0 ? &base.entries()[i] : stores[s]->find(id);
      const auto cs = component_scores(queries[s], *entry, cfg.active, cfg.aggregation,
                                       cfg.missing_component_score);
      const double t = combine_scores(cs.scores, no_bm25);
      es.per_backend.push_back(t);
      es.total += t;
    }
    if (hybrid) es.total += cfg.bm25_weight * bm25[i];
    out.push_back(std::move(es));
  }
  return out;
}

std::vector<EnsembleScore> rank_ensemble(std::span<const EmbeddingVector> queries,
                                         std::span<const SemanticIndexStore* const> stores,
                                         const ScoringConfig& cfg, std::size_t top_k,
                                         std::span<const double> bm25) {
  if (top_k == 0) throw ContractViolation("top_k must be >= 1");
  auto scores = ensemble_scores(queries, stores, cfg, bm25);
  std::sort(scores.begin(), scores.end(), [](const EnsembleScore& a, const EnsembleScore& b) {
    return ranks_before(a.total, a.conv_id, b.total, b.conv_id);
  });
  if (scores.size() > top_k) scores.resize(top_k);
  return scores;
}

}  // namespace svoa
