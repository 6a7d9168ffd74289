#include "svoa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "svoa/core.hpp"

namespace svoa {
namespace {

std::size_t cutoff(std::span<const std::string> ranked, std::size_t k) {
  return std::min(k, ranked.size());
}

std::size_t hits(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k) {
  std::size_t h = 0;
  for (std::size_t i = 0; i < cutoff(ranked, k); ++i) h += relevant.count(ranked[i]);
  return h;
}

void require_k(std::size_t k) {
  if (k == 0) throw ContractViolation("metric cutoff k must be >= 1");
}

}  // namespace

double acc_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k) {
  require_k(k);
  return hits(ranked, relevant, k) > 0 ? 1.0 : 0.0;
}

double p_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k) {
  require_k(k);
  return static_cast<double>(hits(ranked, relevant, k)) / static_cast<double>(k);
}

double r_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k) {
  require_k(k);
  if (relevant.empty()) return 0.0;
  return static_cast<double>(hits(ranked, relevant, k)) / static_cast<double>(relevant.size());
}

double ndcg_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k) {
  require_k(k);
  if (relevant.empty()) return 0.0;
  double dcg = 0.0;
  for (std::size_t i = 0; i < cutoff(ranked, k); ++i) {
    if (relevant.count(ranked[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min(relevant.size(), k);
  for (std::size_t i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return dcg / idcg;
}

double mrr_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k) {
  require_k(k);
  for (std::size_t i = 0; i < cutoff(ranked, k); ++i) {
    if (relevant.count(ranked[i])) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

double map_at_k(std::span<const std::string> ranked, const RelevantSet& relevant, std::size_t k) {
  require_k(k);
  if (relevant.empty()) return 0.0;
  double sum = 0.0;
  std::size_t h = 0;
  for (std::size_t i = 0; i < cutoff(ranked, k); ++i) {
    if (relevant.count(ranked[i])) {
      ++h;
      sum += static_cast<double>(h) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(std::min(relevant.size(), k));
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Acc:
      return "acc";
    case Metric::P:
      return "p";
    case Metric::R:
      return "r";
    case Metric::Ndcg:
      return "ndcg";
    case Metric::Mrr:
      return "mrr";
    case Metric::Map:
      return "map";
  }
  return "?";
}

double compute_metric(Metric m, std::span<const std::string> ranked, const RelevantSet& relevant,
                      std::size_t k) {
  switch (m) {
    case Metric::Acc:
      return acc_at_k(ranked, relevant, k);
    case Metric::P:
      return p_at_k(ranked, relevant, k);
    case Metric::R:
      return r_at_k(ranked, relevant, k);
    case Metric::Ndcg:
      return ndcg_at_k(ranked, relevant, k);
    case Metric::Mrr:
      return mrr_at_k(ranked, relevant, k);
    case Metric::Map:
      return map_at_k(ranked, relevant, k);
  }
  return 0.0;
}

MetricKey parse_metric_key(std::string_view name) {
  const std::string lower = to_lower(trim(name));
  const auto at = lower.find('@');
  if (at != std::string::npos) {
    const std::string metric = lower.substr(0, at);
    const std::string k_str = lower.substr(at + 1);
    for (Metric m : kAllMetrics) {
      if (metric != to_string(m)) continue;
      try {
        std::size_t used = 0;
        const long k = std::stol(k_str, &used);
        if (used == k_str.size() && k >= 1) return {m, static_cast<std::size_t>(k)};
      } catch (const std::exception&) {
      }
    }
  }
  throw ContractViolation("unknown metric '" + std::string(name) +
                          "' (expected acc|p|r|ndcg|mrr|map@k, e.g. ndcg@20)");
}

std::string metric_label(Metric m, std::size_t k) {
  return std::string(to_string(m)) + "@" + std::to_string(k);
}

const std::vector<MetricKey>& table_columns() {
  static const std::vector<MetricKey> cols = {
      {Metric::Acc, 1},   {Metric::Acc, 5},   {Metric::P, 5},     {Metric::P, 10},
      {Metric::R, 5},     {Metric::R, 10},    {Metric::Ndcg, 10}, {Metric::Ndcg, 20},
      {Metric::Mrr, 10},  {Metric::Mrr, 20},  {Metric::Map, 10},  {Metric::Map, 20},
  };
  return cols;
}

double MetricsReport::get(Metric m, std::size_t k) const { return get(metric_label(m, k)); }

double MetricsReport::get(std::string_view label) const {
  auto it = values_.find(std::string(label));
  if (it == values_.end()) throw ContractViolation("report has no metric '" + std::string(label) + "'");
  return it->second;
}

void MetricsReport::set(Metric m, std::size_t k, double value) {
  values_[metric_label(m, k)] = value;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [k, v] : values_) metrics[k] = v;
  nlohmann::json j = {{"query_count", query_count},
                      {"mean_scoring_seconds", mean_scoring_seconds},
                      {"metrics", metrics}};
  if (!label.empty()) j["label"] = label;
  return j;
}

void MetricAccumulator::add(std::span<const std::string> ranked, const RelevantSet& relevant) {
  for (Metric m : kAllMetrics) {
    for (std::size_t k : kReportCutoffs) {
      sums_[metric_label(m, k)] += compute_metric(m, ranked, relevant, k);
    }
  }
  ++count_;
}

MetricsReport MetricAccumulator::finish() const {
  MetricsReport report;
  report.query_count = count_;
  for (Metric m : kAllMetrics) {
    for (std::size_t k : kReportCutoffs) {
      const auto it = sums_.find(metric_label(m, k));
      const double sum = it == sums_.end() ? 0.0 : it->second;
      report.set(m, k, count_ == 0 ? 0.0 : sum / static_cast<double>(count_));
    }
  }
  return report;
}

std::string format_metrics_table(std::span<const MetricsReport> reports) {
  std::size_t label_width = std::string("combination").size();
  for (const auto& r : reports) label_width = std::max(label_width, r.label.size());

  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(label_width)) << "combination";
  for (const auto& col : table_columns()) {
    os << "  " << std::right << std::setw(7) << metric_label(col.metric, col.k);
  }
  os << '\n';
  for (const auto& r : reports) {
    os << std::left << std::setw(static_cast<int>(label_width)) << r.label;
    for (const auto& col : table_columns()) {
      os << "  " << std::right << std::setw(7) << std::fixed << std::setprecision(4)
         << r.get(col.metric, col.k);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace svoa
