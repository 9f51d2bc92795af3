#pragma once

#include "ureid/common.hpp"
#include "ureid/data_model.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace ureid {

// Persistent prototype store: source class centroids, target instance
// features, and the cluster membership sets from which cluster centroids are
// derived. Cluster centroids are always recomputed from the current instance
// rows, never cached, so they cannot drift from the instance features.
class HybridMemory {
 public:
  // Class centroid k = normalized mean of source features with class k; target
  // instance rows are stored verbatim. `source_classes` must be dense in
  // [0, n_classes) with every class populated.
  static HybridMemory init(const Mat& source_features, const std::vector<int>& source_classes,
                           const Mat& target_features, double momentum_source,
                           double momentum_target, bool renormalize = true);

  int n_source_classes() const { return static_cast<int>(centroids_.rows()); }
  int n_target_instances() const { return static_cast<int>(instances_.rows()); }
  int feature_dim() const { return static_cast<int>(instances_.cols()); }

  const Mat& class_centroids() const { return centroids_; }
  const Mat& instance_features() const { return instances_; }
  const std::map<int, std::vector<int>>& clusters() const { return clusters_; }

  // Normalized mean of the member instance rows, computed fresh on every call.
  Vec cluster_centroid(int cluster_id) const;

  // centroid <- normalize(m * centroid + (1-m) * mean of this batch's features
  // of that class), per class present in the batch; absent classes untouched.
  void update_class_centroids(const Mat& features, const std::vector<int>& classes);

  // instance row <- normalize(m * row + (1-m) * feature). Returns ids of clusters
  // containing any updated instance. Duplicate indices in one batch are a
  // contract error.
  std::set<int> update_instances(const Mat& features, const std::vector<int>& instance_indices);

  // Replaces the cluster map with the partition in `state` (validated).
  void rebuild_clusters(const PseudoLabelState& state);

  // Debug/test dump: w rows, v rows, cluster membership.
  void dump_snapshot(const std::string& path) const;

  double momentum_source() const { return momentum_source_; }
  double momentum_target() const { return momentum_target_; }
  bool renormalize() const { return renorm_; }

 private:
  HybridMemory() = default;

  Vec blend(const Vec& old_value, const Vec& incoming, double momentum,
            bool incoming_is_unit) const;

  Mat centroids_;
  Mat instances_;
  std::map<int, std::vector<int>> clusters_;
  double momentum_source_ = 0.2;
  double momentum_target_ = 0.2;
  bool renorm_ = true;
};

}  // namespace ureid
