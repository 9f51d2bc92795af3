#pragma once

#include "ureid/clustering.hpp"
#include "ureid/data_model.hpp"

#include <vector>

namespace ureid {

// Per-point reliability of the main partition. Noise points carry NaN. Every
// member of one main cluster shares the same independence score; compactness
// varies point by point.
struct ReliabilityScores {
  std::vector<double> r_indep;
  std::vector<double> r_comp;

  bool scored(int i) const { return !std::isnan(r_indep[static_cast<std::size_t>(i)]); }
};

// IoU between i's main cluster and its cluster under the loosened criterion;
// a loose-noise i counts as the singleton {i}. Contract error if i is main-noise.
double independence(const ClusterPartition& main, const ClusterPartition& loose, int i);

// IoU between i's main cluster and its cluster under the tightened criterion.
double compactness(const ClusterPartition& main, const ClusterPartition& tight, int i);

// Batch evaluation. Independence is evaluated once per main cluster (via its
// lowest-index member) and shared by all members; under eps-nesting this equals
// the per-point formula everywhere.
ReliabilityScores compute_reliability(const ClusterPartition& main, const ClusterPartition& loose,
                                      const ClusterPartition& tight);

// alpha = the (1 - keep_fraction)-quantile (lower interpolation) of the R_indep
// multiset over epoch-0 clustered points; frozen for the rest of the run.
double calibrate_alpha(const ReliabilityScores& scores, const ClusterPartition& main,
                       double keep_fraction);

struct FilterOptions {
  bool use_independence = true;  // off: the independence-ablation run
  bool use_compactness = true;   // off: the compactness-ablation run
};

// Keeps clusters with shared R_indep > alpha; inside each survivor keeps the
// per-cluster-max-compactness points (R_comp >= beta where beta = max). Dropped
// points, disassembled clusters, clusters shrunk below 2 members, and main-noise
// all become outliers; surviving clusters are re-indexed densely.
PseudoLabelState filter_partition(const ClusterPartition& main, const ReliabilityScores& scores,
                                  double alpha, FilterOptions opts = {});

}  // namespace ureid
