#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "svoa/core.hpp"
#include "svoa/index.hpp"

namespace svoa {

struct KMeansOptions {
  std::size_t k = 15;
  std::uint64_t seed = 0;
  std::size_t max_iterations = 100;
  std::size_t workers = 1;
};

struct KMeansResult {
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> assignment;
  /// Within-cluster sum of squares after each assignment step.
  std::vector<double> wcss_history;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Lloyd's algorithm with k-means++ seeding. Points are used as given
/// (callers normalize). Ties in the assignment step keep the current
/// cluster, then the lowest id; an emptied cluster keeps its old centroid.
/// Throws ContractViolation if k is 0, dimensions differ, or there are
/// fewer than k distinct points.
KMeansResult kmeans(std::span<const std::vector<double>> points, const KMeansOptions& options);

double squared_distance(std::span<const double> a, std::span<const double> b);

struct ClusterMember {
  std::string conv_id;
  std::string text;
  double distance = 0.0;
};

struct Cluster {
  std::vector<double> centroid;
  /// Sorted by ascending distance to the centroid.
  std::vector<ClusterMember> members;
  std::vector<std::string> representatives;
};

struct ClusterReport {
  ComponentKind kind = ComponentKind::SV;
  std::size_t k = 0;
  std::size_t instance_count = 0;
  std::size_t iterations = 0;
  std::vector<Cluster> clusters;
};

/// k-means over the unit-normalized embeddings of every SV, SVO or SVOA
/// instance in the store. Each cluster carries `representative_count`
/// deduplicated nearest-to-centroid texts.
ClusterReport cluster_components(const SemanticIndexStore& store, ComponentKind kind,
                                 const KMeansOptions& options,
                                 std::size_t representative_count = 5);

/// The `count` member texts closest to the cluster's centroid, deduplicated.
std::vector<std::string> representatives(const ClusterReport& report, std::size_t cluster_id,
                                         std::size_t count);

nlohmann::json cluster_report_to_json(const ClusterReport& report, bool include_members = false);
/// One row per cluster: id, size, representative samples.
std::string format_cluster_table(const ClusterReport& report);

}  // namespace svoa
