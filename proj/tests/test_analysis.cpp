#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "svoa/analysis.hpp"
#include "test_support.hpp"

using namespace svoa;
using svoa::testing::make_conv;
using svoa::testing::mock_index;

namespace {

std::vector<double> unit(std::vector<double> v) {
  double n = 0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

// Two tight clouds on the unit sphere around orthogonal directions.
std::vector<std::vector<double>> two_clouds(std::mt19937_64& rng, std::size_t per_cloud,
                                            std::size_t dim, double spread) {
  std::normal_distribution<double> noise(0.0, spread);
  std::vector<std::vector<double>> pts;
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < per_cloud; ++i) {
      std::vector<double> v(dim);
      for (auto& x : v) x = noise(rng);
      v[c] += 1.0;
      pts.push_back(unit(v));
    }
  }
  return pts;
}

double partition_cost(const std::vector<std::vector<double>>& pts, std::uint32_t mask) {
  double cost = 0;
  for (int side = 0; side < 2; ++side) {
    std::vector<double> mean(pts[0].size(), 0.0);
    std::size_t n = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (((mask >> i) & 1u) != static_cast<std::uint32_t>(side)) continue;
      for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += pts[i][d];
      ++n;
    }
    if (n == 0) return std::numeric_limits<double>::infinity();
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (((mask >> i) & 1u) == static_cast<std::uint32_t>(side)) cost += squared_distance(pts[i], mean);
    }
  }
  return cost;
}

// Exhaustive optimum over every 2-partition; point 0 pinned to side 0.
std::uint32_t best_partition(const std::vector<std::vector<double>>& pts) {
  std::uint32_t best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << pts.size()); mask += 2) {
    const double c = partition_cost(pts, mask);
    if (c < best_cost) {
      best_cost = c;
      best = mask;
    }
  }
  return best;
}

bool same_partition(const std::vector<std::size_t>& assignment, std::uint32_t mask) {
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    const bool a = assignment[i] == assignment[0];
    const bool b = ((mask >> i) & 1u) == 0;
    if (a != b) return false;
  }
  return true;
}

}  // namespace

TEST(KMeans, PlantedCloudsMatchBruteForceOptimum) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pts = two_clouds(rng, 8, 6, 0.05);
    KMeansOptions o;
    o.k = 2;
    o.seed = static_cast<std::uint64_t>(trial);
    const auto r = kmeans(pts, o);
    EXPECT_TRUE(r.converged);
    EXPECT_TRUE(same_partition(r.assignment, best_partition(pts))) << "trial " << trial;
    for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(r.assignment[i], r.assignment[0]);
    for (std::size_t i = 8; i < 16; ++i) EXPECT_NE(r.assignment[i], r.assignment[0]);
  }
}

TEST(KMeans, SingleClusterIsTheMean) {
  const std::vector<std::vector<double>> pts = {unit({1, 0, 0}), unit({0, 1, 0}), unit({1, 1, 0}),
                                                unit({0, 0, 1})};
  KMeansOptions o;
  o.k = 1;
  const auto r = kmeans(pts, o);
  ASSERT_EQ(r.centroids.size(), 1u);
  const double s = 1.0 / std::sqrt(2.0);
  const std::vector<double> mean = {(1 + s) / 4, (1 + s) / 4, 0.25};
  for (std::size_t d = 0; d < 3; ++d) EXPECT_NEAR(r.centroids[0][d], mean[d], 1e-15);
}

TEST(KMeans, WcssNeverIncreases) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> pts(60, std::vector<double>(4));
    for (auto& p : pts) {
      for (auto& x : p) x = n(rng);
      p = unit(p);
    }
    KMeansOptions o;
    o.k = 5;
    o.seed = static_cast<std::uint64_t>(trial);
    const auto r = kmeans(pts, o);
    for (std::size_t i = 1; i < r.wcss_history.size(); ++i) {
      EXPECT_LE(r.wcss_history[i], r.wcss_history[i - 1]);
    }
  }
}

TEST(KMeans, DeterministicAndParallelInvariant) {
  std::mt19937_64 rng(3);
  const auto pts = two_clouds(rng, 30, 8, 0.3);
  KMeansOptions o;
  o.k = 4;
  o.seed = 9;
  const auto a = kmeans(pts, o);
  o.workers = 3;
  const auto b = kmeans(pts, o);
  EXPECT_EQ(a.assignment, b.assignment);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.wcss_history, b.wcss_history);
}

TEST(KMeans, Contracts) {
  const std::vector<std::vector<double>> dup = {{1, 0}, {1, 0}, {1, 0}};
  KMeansOptions o;
  o.k = 2;
  EXPECT_THROW(kmeans(dup, o), ContractViolation);
  o.k = 0;
  EXPECT_THROW(kmeans(dup, o), ContractViolation);
  const std::vector<std::vector<double>> mixed = {{1, 0}, {1, 0, 0}};
  o.k = 1;
  EXPECT_THROW(kmeans(mixed, o), ContractViolation);
}

TEST(Clustering, SeparatesVerbFamiliesAndPicksRepresentatives) {
  std::vector<ConversationRecord> corpus;
  for (int i = 0; i < 6; ++i) {
    corpus.push_back(make_conv("q" + std::to_string(i),
                               {{"user", "What movies do you like " + std::to_string(i) + "?"}}));
    corpus.push_back(make_conv("t" + std::to_string(i), {{"user", "Thanks!"}}));
  }
  const auto store = mock_index(corpus, 64);
  KMeansOptions o;
  o.k = 2;
  const auto report = cluster_components(store, ComponentKind::SV, o, 3);
  EXPECT_EQ(report.instance_count, 12u);
  ASSERT_EQ(report.clusters.size(), 2u);
  for (const auto& c : report.clusters) {
    ASSERT_FALSE(c.members.empty());
    // One dedup'd SV text per cluster, so a single representative.
    ASSERT_EQ(c.representatives.size(), 1u);
    const char family = c.members.front().conv_id[0];
    for (const auto& m : c.members) EXPECT_EQ(m.conv_id[0], family);
    for (std::size_t i = 1; i < c.members.size(); ++i) {
      EXPECT_LE(c.members[i - 1].distance, c.members[i].distance);
    }
  }
  EXPECT_EQ(representatives(report, 0, 10).size(), 1u);
  EXPECT_THROW(representatives(report, 2, 1), ContractViolation);
  EXPECT_THROW(cluster_components(store, ComponentKind::Message, o), ContractViolation);
  o.k = 5;
  EXPECT_THROW(cluster_components(store, ComponentKind::SV, o), ContractViolation);

  const auto j = cluster_report_to_json(report, true);
  EXPECT_EQ(j["clusters"].size(), 2u);
  EXPECT_NE(format_cluster_table(report).find("size"), std::string::npos);
}
