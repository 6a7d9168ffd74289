#include "svoa/eval.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <random>
#include <unordered_map>

#include "svoa/parallel.hpp"

namespace svoa {
namespace {

using nlohmann::json;

class FileError : public Error {
 public:
  FileError(const std::filesystem::path& path, std::size_t line, const std::string& what)
      : Error(path.string() + ":" + std::to_string(line) + ": " + what) {}
};

template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) throw FileError(path, line_no, "not a JSON object");
    try {
      fn(j, line_no);
    } catch (const FileError&) {
      throw;
    } catch (const std::exception& e) {
      throw FileError(path, line_no, e.what());
    }
  }
}

void check_targets(std::span<const BenchmarkTarget> targets) {
  if (targets.empty()) throw ContractViolation("benchmark needs at least one index");
  for (const auto& t : targets) {
    if (!t.store || !t.backend) throw ContractViolation("benchmark target is incomplete");
    if (t.backend->model_id() != t.store->manifest().model_id) {
      throw ContractViolation("embedding backend '" + t.backend->model_id() +
                              "' does not match index model '" + t.store->manifest().model_id +
                              "'");
    }
  }
}

std::vector<EmbeddingVector> embed_queries(std::span<const QueryRecord> queries,
                                           EmbeddingBackend& backend, EmbeddingCache* cache,
                                           const EmbedOptions& options) {
  std::vector<std::string> texts;
  texts.reserve(queries.size());
  for (const auto& q : queries) texts.push_back(q.text);
  return embed_texts(texts, backend, cache, options);
}

std::vector<std::string> top_ids(std::span<const double> totals, const SemanticIndexStore& store,
                                 std::size_t depth) {
  std::vector<std::size_t> order(totals.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t k = std::min(depth, order.size());
  const auto& entries = store.entries();
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (totals[a] != totals[b]) return totals[a] > totals[b];
                      return entries[a].record.conv_id < entries[b].record.conv_id;
                    });
  std::vector<std::string> out;
  out.reserve(k);
  for (std::size_t r = 0; r < k; ++r) out.push_back(entries[order[r]].record.conv_id);
  return out;
}

}  // namespace

json conversation_to_json(const ConversationRecord& conv) {
  json messages = json::array();
  for (const auto& m : conv.messages) messages.push_back({{"role", m.role}, {"text", m.text}});
  return {{"conv_id", conv.conv_id}, {"messages", messages}};
}

ConversationRecord conversation_from_json(const json& j) {
  ConversationRecord conv;
  conv.conv_id = j.at("conv_id").get<std::string>();
  const auto& messages = j.at("messages");
  if (!messages.is_array()) throw ContractViolation("\"messages\" must be an array");
  for (const auto& m : messages) {
    conv.messages.push_back(
        {conv.messages.size(), m.at("role").get<std::string>(), m.at("text").get<std::string>()});
  }
  validate(conv);
  return conv;
}

std::vector<ConversationRecord> load_corpus(const std::filesystem::path& path) {
  std::vector<ConversationRecord> out;
  std::unordered_set<std::string> seen;
  for_each_json_line(path, [&](const json& j, std::size_t line_no) {
    auto conv = conversation_from_json(j);
    if (!seen.insert(conv.conv_id).second) {
      throw FileError(path, line_no, "duplicate conv_id '" + conv.conv_id + "'");
    }
    out.push_back(std::move(conv));
  });
  return out;
}

std::vector<QueryRecord> load_queries(const std::filesystem::path& path,
                                      const std::unordered_set<std::string>* known_conv_ids) {
  std::vector<QueryRecord> out;
  std::unordered_set<std::string> seen;
  for_each_json_line(path, [&](const json& j, std::size_t line_no) {
    QueryRecord q;
    q.query_id = j.at("query_id").get<std::string>();
    q.text = j.at("text").get<std::string>();
    q.relevant_conv_ids = j.at("relevant_conv_ids").get<std::vector<std::string>>();
    if (q.query_id.empty()) throw FileError(path, line_no, "empty query_id");
    if (trim(q.text).empty()) throw FileError(path, line_no, "empty query text");
    if (q.relevant_conv_ids.empty()) {
      throw FileError(path, line_no, "query '" + q.query_id + "' has no relevant_conv_ids");
    }
    if (!seen.insert(q.query_id).second) {
      throw FileError(path, line_no, "duplicate query_id '" + q.query_id + "'");
    }
    if (known_conv_ids) {
      for (const auto& id : q.relevant_conv_ids) {
        if (!known_conv_ids->count(id)) {
          throw FileError(path, line_no,
                          "query '" + q.query_id + "' references unknown conv_id '" + id + "'");
        }
      }
    }
    out.push_back(std::move(q));
  });
  return out;
}

void write_corpus(const std::filesystem::path& path, std::span<const ConversationRecord> corpus) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& conv : corpus) out << conversation_to_json(conv).dump() << '\n';
}

void write_queries(const std::filesystem::path& path, std::span<const QueryRecord> queries) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& q : queries) {
    out << json{{"query_id", q.query_id}, {"text", q.text}, {"relevant_conv_ids", q.relevant_conv_ids}}
               .dump()
        << '\n';
  }
}

std::vector<std::vector<std::string>> rank_queries(std::span<const BenchmarkTarget> targets,
                                                   std::span<const QueryRecord> queries,
                                                   EmbeddingCache* cache,
                                                   const BenchmarkOptions& options,
                                                   double* mean_scoring_seconds) {
  check_targets(targets);
  options.scoring.validate();
  const SemanticIndexStore& base = *targets[0].store;

  std::vector<std::vector<EmbeddingVector>> query_vectors;
  for (const auto& t : targets) {
    query_vectors.push_back(embed_queries(queries, *t.backend, cache, options.embed));
  }
  std::vector<const SemanticIndexStore*> stores;
  for (const auto& t : targets) stores.push_back(t.store);

  std::optional<Bm25Index> bm25;
  if (options.scoring.bm25_weight != 0.0) bm25.emplace(base);

  std::vector<std::vector<std::string>> rankings(queries.size());
  std::vector<double> seconds(queries.size(), 0.0);
  parallel_for(queries.size(), options.workers, [&](std::size_t qi) {
    std::vector<double> bm25_scores;
    if (bm25) bm25_scores = bm25->scores(queries[qi].text);
    const auto start = std::chrono::steady_clock::now();
    if (targets.size() == 1) {
      RankOptions ro;
      ro.top_k = options.depth;
      ro.bm25 = bm25_scores;
      const auto ranked = rank_conversations(query_vectors[0][qi], base, options.scoring, ro);
      seconds[qi] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      for (const auto& b : ranked) rankings[qi].push_back(b.conv_id);
    } else {
      std::vector<EmbeddingVector> per_target;
      for (const auto& qv : query_vectors) per_target.push_back(qv[qi]);
      const auto ranked =
          rank_ensemble(per_target, stores, options.scoring, options.depth, bm25_scores);
      seconds[qi] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      for (const auto& e : ranked) rankings[qi].push_back(e.conv_id);
    }
  });

  if (mean_scoring_seconds) {
    double total = 0.0;
    for (double s : seconds) total += s;
    *mean_scoring_seconds = queries.empty() ? 0.0 : total / static_cast<double>(queries.size());
  }
  return rankings;
}

MetricsReport evaluate_rankings(std::span<const std::vector<std::string>> rankings,
                                std::span<const QueryRecord> queries) {
  if (rankings.size() != queries.size()) {
    throw ContractViolation("one ranking per query is required");
  }
  MetricAccumulator acc;
  for (std::size_t i = 0; i < queries.size(); ++i) acc.add(rankings[i], queries[i].relevant());
  return acc.finish();
}

MetricsReport run_benchmark(std::span<const BenchmarkTarget> targets,
                            std::span<const QueryRecord> queries, EmbeddingCache* cache,
                            const BenchmarkOptions& options) {
  check_targets(targets);
  for (const auto& q : queries) {
    for (const auto& id : q.relevant_conv_ids) {
      if (!targets[0].store->find(id)) {
        throw ContractViolation("query '" + q.query_id + "' references conv_id '" + id +
                                "' which is not in the index");
      }
    }
  }
  double mean_seconds = 0.0;
  const auto rankings = rank_queries(targets, queries, cache, options, &mean_seconds);
  MetricsReport report = evaluate_rankings(rankings, queries);
  report.mean_scoring_seconds = mean_seconds;
  report.label = to_string(options.scoring.active);
  return report;
}

WeightSearchResult optimize_weights(const SemanticIndexStore& store, EmbeddingBackend& backend,
                                    std::span<const QueryRecord> queries, EmbeddingCache* cache,
                                    const ScoringConfig& base, const WeightSearchConfig& search) {
  base.validate();
  if (queries.empty()) throw ContractViolation("weight search needs a non-empty validation set");
  if (!(search.min_weight >= 0.0) || !(search.max_weight >= search.min_weight)) {
    throw ContractViolation("weight range must satisfy 0 <= min <= max");
  }
  const MetricKey objective = parse_metric_key(search.objective);
  BenchmarkTarget target{&store, &backend};
  check_targets({&target, 1});

  // Component scores do not depend on the weights, so they are computed once
  // and every candidate only re-combines and re-ranks.
  const auto qvecs = embed_queries(queries, backend, cache, {});
  const std::size_t n = store.size();
  std::vector<std::vector<std::array<double, kComponentKindCount>>> scores(
      queries.size(), std::vector<std::array<double, kComponentKindCount>>(n));
  std::vector<std::vector<double>> bm25(queries.size());
  std::optional<Bm25Index> bm25_index;
  if (base.bm25_weight != 0.0) bm25_index.emplace(store);
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    for (std::size_t c = 0; c < n; ++c) {
      scores[qi][c] = component_scores(qvecs[qi], store.entries()[c], base.active, base.aggregation,
                                       base.missing_component_score)
                          .scores;
    }
    if (bm25_index) bm25[qi] = bm25_index->scores(queries[qi].text);
  }
  std::vector<RelevantSet> relevant;
  for (const auto& q : queries) relevant.push_back(q.relevant());

  auto evaluate = [&](const ScoringConfig& cfg) {
    double sum = 0.0;
    std::vector<double> totals(n);
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
      for (std::size_t c = 0; c < n; ++c) {
        totals[c] = combine_scores(scores[qi][c], cfg, bm25_index ? bm25[qi][c] : 0.0);
      }
      const auto ranked = top_ids(totals, store, objective.k);
      sum += compute_metric(objective.metric, ranked, relevant[qi], objective.k);
    }
    return sum / static_cast<double>(queries.size());
  };

  ScoringConfig candidate = base;
  for (ComponentKind k : kAllComponentKinds) {
    if (base.active.contains(k)) candidate.weights[to_index(k)] = 1.0;
  }
  WeightSearchResult result;
  result.weights = candidate.weights;
  result.objective = evaluate(candidate);
  result.uniform_objective = result.objective;
  result.candidates_evaluated = 1;

  std::mt19937_64 rng(search.seed);
  std::uniform_real_distribution<double> dist(search.min_weight, search.max_weight);
  for (std::size_t s = 1; s <= search.sample_count; ++s) {
    for (ComponentKind k : kAllComponentKinds) {
      if (base.active.contains(k)) candidate.weights[to_index(k)] = dist(rng);
    }
    const double value = evaluate(candidate);
    ++result.candidates_evaluated;
    if (value > result.objective) {
      result.objective = value;
      result.weights = candidate.weights;
      result.best_candidate = s;
    }
  }
  return result;
}

}  // namespace svoa
