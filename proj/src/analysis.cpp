#include "svoa/analysis.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "svoa/parallel.hpp"

namespace svoa {
namespace {

std::vector<std::vector<double>> seed_centroids(std::span<const std::vector<double>> points,
                                                std::size_t k, std::mt19937_64& rng) {
  std::vector<std::vector<double>> centroids;
  centroids.push_back(
      points[std::uniform_int_distribution<std::size_t>(0, points.size() - 1)(rng)]);
  std::vector<double> nearest(points.size(), std::numeric_limits<double>::infinity());
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points[i], centroids.back()));
      total += nearest[i];
    }
    const double r = std::uniform_real_distribution<double>(0.0, total)(rng);
    double acc = 0.0;
    std::size_t pick = points.size();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (nearest[i] <= 0.0) continue;
      acc += nearest[i];
      pick = i;
      if (acc > r) break;
    }
    centroids.push_back(points[pick]);
  }
  return centroids;
}

}  // namespace

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

KMeansResult kmeans(std::span<const std::vector<double>> points, const KMeansOptions& options) {
  const std::size_t k = options.k;
  if (k == 0) throw ContractViolation("k must be >= 1");
  if (points.empty()) throw ContractViolation("k-means needs at least one point");
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw ContractViolation("k-means points have mixed dimensions");
  }
  const std::set<std::vector<double>> distinct(points.begin(), points.end());
  if (distinct.size() < k) {
    throw ContractViolation("k-means needs at least " + std::to_string(k) +
                            " distinct points, got " + std::to_string(distinct.size()));
  }

  std::mt19937_64 rng(options.seed);
  KMeansResult result;
  result.centroids = seed_centroids(points, k, rng);
  const std::size_t n = points.size();
  result.assignment.assign(n, k);  // k marks "unassigned"
  std::vector<double> dist(n, 0.0);

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    std::vector<std::size_t> next(n);
    parallel_for(n, options.workers, [&](std::size_t i) {
      std::size_t best = result.assignment[i];
      double best_d = best < k ? squared_distance(points[i], result.centroids[best])
                               : std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(points[i], result.centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      next[i] = best;
      dist[i] = best_d;
    });
    double wcss = 0.0;
    for (double d : dist) wcss += d;
    result.wcss_history.push_back(wcss);
    result.iterations = iter + 1;
    if (next == result.assignment) {
      result.converged = true;
      break;
    }
    result.assignment = std::move(next);

    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = sums[result.assignment[i]];
      for (std::size_t d = 0; d < dim; ++d) s[d] += points[i][d];
      ++counts[result.assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (double& v : sums[c]) v /= static_cast<double>(counts[c]);
      result.centroids[c] = std::move(sums[c]);
    }
  }
  return result;
}

ClusterReport cluster_components(const SemanticIndexStore& store, ComponentKind kind,
                                 const KMeansOptions& options,
                                 std::size_t representative_count) {
  if (kind != ComponentKind::SV && kind != ComponentKind::SVO && kind != ComponentKind::SVOA) {
    throw ContractViolation("clustering supports sv, svo and svoa instances only");
  }
  std::vector<std::vector<double>> points;
  std::vector<ClusterMember> members;
  for (const auto& entry : store.entries()) {
    for (const auto& inst : entry.of(kind)) {
      if (inst.embedding.is_zero()) continue;
      const EmbeddingVector normalized = l2_normalize(inst.embedding);
      const auto unit = normalized.values();
      points.emplace_back(unit.begin(), unit.end());
      members.push_back({entry.record.conv_id, inst.text, 0.0});
    }
  }
  if (points.size() < options.k) {
    throw ContractViolation("cannot form " + std::to_string(options.k) + " clusters from " +
                            std::to_string(points.size()) + " " + std::string(to_string(kind)) +
                            " instances");
  }
  const KMeansResult km = kmeans(points, options);

  ClusterReport report;
  report.kind = kind;
  report.k = options.k;
  report.instance_count = points.size();
  report.iterations = km.iterations;
  report.clusters.resize(options.k);
  for (std::size_t c = 0; c < options.k; ++c) report.clusters[c].centroid = km.centroids[c];
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& cluster = report.clusters[km.assignment[i]];
    ClusterMember m = members[i];
    m.distance = squared_distance(points[i], cluster.centroid);
    cluster.members.push_back(std::move(m));
  }
  for (std::size_t c = 0; c < options.k; ++c) {
    auto& ms = report.clusters[c].members;
    std::stable_sort(ms.begin(), ms.end(), [](const ClusterMember& a, const ClusterMember& b) {
      return a.distance < b.distance;
    });
    report.clusters[c].representatives = representatives(report, c, representative_count);
  }
  return report;
}

std::vector<std::string> representatives(const ClusterReport& report, std::size_t cluster_id,
                                         std::size_t count) {
  if (cluster_id >= report.clusters.size()) {
    throw ContractViolation("cluster id " + std::to_string(cluster_id) + " out of range");
  }
  std::vector<const ClusterMember*> ordered;
  for (const auto& m : report.clusters[cluster_id].members) ordered.push_back(&m);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const ClusterMember* a, const ClusterMember* b) {
                     return a->distance < b->distance;
                   });
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto* m : ordered) {
    if (out.size() >= count) break;
    if (seen.insert(m->text).second) out.push_back(m->text);
  }
  return out;
}

nlohmann::json cluster_report_to_json(const ClusterReport& report, bool include_members) {
  nlohmann::json clusters = nlohmann::json::array();
  for (std::size_t c = 0; c < report.clusters.size(); ++c) {
    const auto& cl = report.clusters[c];
    nlohmann::json j = {{"id", c},
                        {"size", cl.members.size()},
                        {"representatives", cl.representatives},
                        {"centroid", cl.centroid}};
    if (include_members) {
      nlohmann::json ms = nlohmann::json::array();
      for (const auto& m : cl.members) {
        ms.push_back({{"conv_id", m.conv_id}, {"text", m.text}, {"distance", m.distance}});
      }
      j["members"] = std::move(ms);
    }
    clusters.push_back(std::move(j));
  }
  return {{"kind", to_string(report.kind)},
          {"k", report.k},
          {"instance_count", report.instance_count},
          {"iterations", report.iterations},
          {"clusters", std::move(clusters)}};
}

std::string format_cluster_table(const ClusterReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(4) << "id" << "  " << std::right << std::setw(6) << "size"
     << "  samples\n";
  for (std::size_t c = 0; c < report.clusters.size(); ++c) {
    const auto& cl = report.clusters[c];
    std::string samples;
    for (const auto& r : cl.representatives) {
      if (!samples.empty()) samples += "; ";
      samples += r;
    }
    os << std::left << std::setw(4) << c << "  " << std::right << std::setw(6)
       << cl.members.size() << "  " << samples << '\n';
  }
  return os.str();
}

}  // namespace svoa
