#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "svoa/embedding.hpp"
#include "svoa/retrieval.hpp"

namespace svoa {

Bm25Index::Bm25Index(const SemanticIndexStore& store, double k1, double b) : k1_(k1), b_(b) {
  std::vector<std::string> docs;
  docs.reserve(store.size());
  for (const auto& e : store.entries()) docs.push_back(render_conversation_text(e.record));
  build(docs);
}

Bm25Index::Bm25Index(std::span<const std::string> documents, double k1, double b)
    : k1_(k1), b_(b) {
  build(documents);
}

void Bm25Index::build(std::span<const std::string> documents) {
  doc_lengths_.assign(documents.size(), 0.0);
  double total = 0.0;
  for (std::size_t d = 0; d < documents.size(); ++d) {
    std::unordered_map<std::string, double> tf;
    const auto tokens = hash_tokens(documents[d]);
    for (const auto& t : tokens) tf[t] += 1.0;
    doc_lengths_[d] = static_cast<double>(tokens.size());
    total += doc_lengths_[d];
    for (auto& [term, freq] : tf) postings_[term].emplace_back(d, freq);
  }
  avg_length_ = documents.empty() ? 0.0 : total / static_cast<double>(documents.size());
}

std::vector<double> Bm25Index::raw_scores(std::string_view query) const {
  std::vector<double> scores(doc_lengths_.size(), 0.0);
  const double n = static_cast<double>(doc_lengths_.size());
  for (const auto& term : hash_tokens(query)) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double df = static_cast<double>(it->second.size());
    const double idf = std::max(0.0, std::log(1.0 + (n - df + 0.5) / (df + 0.5)));
    for (const auto& [doc, tf] : it->second) {
      const double norm = avg_length_ > 0.0 ? doc_lengths_[doc] / avg_length_ : 0.0;
      scores[doc] += idf * tf * (k1_ + 1.0) / (tf + k1_ * (1.0 - b_ + b_ * norm));
    }
  }
  return scores;
}

std::vector<double> Bm25Index::scores(std::string_view query) const {
  auto s = raw_scores(query);
  const double max = s.empty() ? 0.0 : *std::max_element(s.begin(), s.end());
  if (max > 0.0) {
    for (double& x : s) x /= max;
  }
  return s;
}

std::unordered_map<std::string, double> bm25_scores(std::string_view query_text,
                                                    const SemanticIndexStore& store, double k1,
                                                    double b) {
  if (store.empty()) throw ContractViolation("bm25_scores: store is empty");
  const Bm25Index index(store, k1, b);
  const auto s = index.scores(query_text);
  std::unordered_map<std::string, double> out;
  for (std::size_t i = 0; i < s.size(); ++i) out.emplace(store.entries()[i].record.conv_id, s[i]);
  return out;
}

}  // namespace svoa
