#pragma once

#include "ureid/common.hpp"

#include <vector>

namespace ureid {

struct DbscanParams {
  double eps = 0.6;    // maximum neighbor distance
  int min_pts = 4;     // neighbors (excluding self) required for a core point
  double delta = 0.02; // loose/tight offset for the three-scale run

  void validate() const;
};

struct ClusterPartition {
  std::vector<int> label;  // -1 = noise, else dense cluster id
  int n_clusters = 0;

  int size() const { return static_cast<int>(label.size()); }
  std::vector<std::vector<int>> cluster_members() const;  // ascending per cluster
};

// Deterministic DBSCAN over a precomputed distance matrix:
//   core:  point with >= min_pts neighbors (self excluded) within eps;
//   clusters: connected components of the core-core graph, ids ordered by the
//             smallest core index in the component;
//   border: attaches to the cluster of the lowest-index core within eps.
// Brute-force O(n^2) neighborhoods; the matrix is already materialized.
ClusterPartition dbscan(const Mat& dist, double eps, int min_pts);

struct ThreeScalePartitions {
  ClusterPartition main;   // at eps
  ClusterPartition loose;  // at eps + delta
  ClusterPartition tight;  // at eps - delta
};

ThreeScalePartitions cluster_at_three_scales(const Mat& dist, const DbscanParams& params);

}  // namespace ureid
