#pragma once

#include "ureid/common.hpp"
#include "ureid/data_model.hpp"
#include "ureid/memory.hpp"

#include <vector>

namespace ureid {

enum class Segment { SourceClass, TargetCluster, TargetOutlier };

struct PositiveRef {
  Segment segment = Segment::SourceClass;
  int index = 0;
};

// Ordered concatenation of the three prototype families:
// [source class centroids] ++ [cluster centroids] ++ [outlier instance features].
class PrototypeBank {
 public:
  PrototypeBank(Mat source, Mat clusters, Mat outliers, double temperature);

  int n_source() const { return n_source_; }
  int n_cluster() const { return n_cluster_; }
  int n_outlier() const { return n_outlier_; }
  int size() const { return static_cast<int>(all_.rows()); }
  double temperature() const { return tau_; }
  const Mat& prototypes() const { return all_; }

  int segment_begin(Segment s) const;
  int segment_end(Segment s) const;
  int flat_index(PositiveRef ref) const;  // bounds-checked

  // Maps outlier segment position -> target instance index (set by make_prototype_bank).
  const std::vector<int>& outlier_instances() const { return outlier_instances_; }

 private:
  friend PrototypeBank make_prototype_bank(const HybridMemory&, const PseudoSplit&, double, bool,
                                           bool);
  friend PrototypeBank unsupervised_bank(const PrototypeBank&);

  Mat all_;
  int n_source_ = 0;
  int n_cluster_ = 0;
  int n_outlier_ = 0;
  double tau_ = 0.05;
  std::vector<int> outlier_instances_;
};

// Builds the bank from the memory and the current pseudo-label split. Cluster
// centroids are recomputed from the instance store; the outlier segment holds
// the memory rows of un-clustered instances in ascending instance order.
PrototypeBank make_prototype_bank(const HybridMemory& mem, const PseudoSplit& split,
                                  double temperature, bool include_source = true,
                                  bool include_outliers = true);

// Same bank with an empty source segment (no labeled source data available).
PrototypeBank unsupervised_bank(const PrototypeBank& bank);

// -log softmax(f . z+ / tau) over all prototypes, max-logit-stabilized.
// With `restrict_to_own_segment` the denominator only runs over the positive's
// segment (ablation of the cross-family contrast).
double unified_loss(const Vec& f, const PrototypeBank& bank, PositiveRef pos,
                    bool restrict_to_own_segment = false);

// dLoss/df = (sum_j p_j z_j - z+) / tau; prototypes receive no gradient.
Vec unified_loss_grad(const Vec& f, const PrototypeBank& bank, PositiveRef pos,
                      bool restrict_to_own_segment = false);

struct BatchLossResult {
  double mean_loss = 0.0;
  Mat feature_grads;  // one row per query, already scaled by 1/batch
};

// `roles[i]` is the caller's claim about query i's family; a positive outside
// its role's segment is a contract error.
BatchLossResult batch_loss(const Mat& features, const PrototypeBank& bank,
                           const std::vector<PositiveRef>& positives,
                           const std::vector<Segment>& roles,
                           bool restrict_to_own_segment = false);

}  // namespace ureid
