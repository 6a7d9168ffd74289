#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

namespace svoa {

using RelevantSet = std::unordered_set<std::string>;

// Binary-relevance ranking metrics for a single query. `ranked` is the
// system's ranking (best first); only its first k entries are inspected.

/// 1 if any relevant item appears in the top k, else 0.
double acc_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k);
/// hits / k
double p_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k);
/// hits / |relevant|
double r_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k);
/// DCG with gain 1/log2(rank + 1) over 1-based ranks, divided by the ideal
/// DCG of min(|relevant|, k) relevant items.
double ndcg_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k);
/// 1 / rank of the first relevant item within k, else 0.
double mrr_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k);
/// Sum of precision@i at each hit i <= k, divided by min(|relevant|, k).
double map_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k);

enum class Metric { Acc, P, R, Ndcg, Mrr, Map };

inline constexpr std::array<Metric, 6> kAllMetrics = {Metric::Acc, Metric::P,   Metric::R,
                                                      Metric::Ndcg, Metric::Mrr, Metric::Map};
inline constexpr std::array<std::size_t, 4> kReportCutoffs = {1, 5, 10, 20};

std::string_view to_string(Metric m);
double compute_metric(Metric m, std::span<const std::string> ranked, const RelevantSet& relevant,
                      std::size_t k);

struct MetricKey {
  Metric metric = Metric::Ndcg;
  std::size_t k = 20;
};
/// Parses "ndcg@20", "acc@1", ...
MetricKey parse_metric_key(std::string_view name);
std::string metric_label(Metric m, std::size_t k);

/// Column order of the reference result tables.
const std::vector<MetricKey>& table_columns();

/// Means over a query set of every metric at every report cutoff.
class MetricsReport {
 public:
  double get(Metric m, std::size_t k) const;
  double get(std::string_view label) const;
  void set(Metric m, std::size_t k, double value);

  std::size_t query_count = 0;
  /// Mean wall-clock seconds of the scoring step per query.
  double mean_scoring_seconds = 0.0;
  std::string label;

  const std::map<std::string, double>& values() const { return values_; }

  nlohmann::json to_json() const;

 private:
  std::map<std::string, double> values_;
};

/// Accumulates per-query metrics; finish() averages them.
class MetricAccumulator {
 public:
  void add(std::span<const std::string> ranked, const RelevantSet& relevant);
  MetricsReport finish() const;

 private:
  std::map<std::string, double> sums_;
  std::size_t count_ = 0;
};

/// Aligned plain-text table in reference column order; one row per report.
std::string format_metrics_table(std::span<const MetricsReport> reports);

}  // namespace svoa
