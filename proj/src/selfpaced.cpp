#include "ureid/selfpaced.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ureid {

namespace {

// IoU of two ascending index sets.
double set_iou(const std::vector<int>& a, const std::vector<int>& b) {
  int inter = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++inter;
      ++ia;
      ++ib;
    }
  }
  const int uni = static_cast<int>(a.size() + b.size()) - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<int> cluster_of(const ClusterPartition& part, int i,
                            const std::vector<std::vector<int>>& members) {
  const int c = part.label[static_cast<std::size_t>(i)];
  if (c < 0) return {i};  // noise counts as the singleton {i}
  return members[static_cast<std::size_t>(c)];
}

}  // namespace

double independence(const ClusterPartition& main, const ClusterPartition& loose, int i) {
  if (main.label[static_cast<std::size_t>(i)] < 0) {
    throw ContractError("independence: point " + std::to_string(i) + " is noise in the main partition");
  }
  const auto main_members = main.cluster_members();
  const auto loose_members = loose.cluster_members();
  return set_iou(main_members[static_cast<std::size_t>(main.label[static_cast<std::size_t>(i)])],
                 cluster_of(loose, i, loose_members));
}

double compactness(const ClusterPartition& main, const ClusterPartition& tight, int i) {
  if (main.label[static_cast<std::size_t>(i)] < 0) {
    throw ContractError("compactness: point " + std::to_string(i) + " is noise in the main partition");
  }
  const auto main_members = main.cluster_members();
  const auto tight_members = tight.cluster_members();
  return set_iou(main_members[static_cast<std::size_t>(main.label[static_cast<std::size_t>(i)])],
                 cluster_of(tight, i, tight_members));
}

ReliabilityScores compute_reliability(const ClusterPartition& main, const ClusterPartition& loose,
                                      const ClusterPartition& tight) {
  const int n = main.size();
  if (loose.size() != n || tight.size() != n) {
    throw ContractError("compute_reliability: partitions cover different point counts");
  }
  ReliabilityScores scores;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  scores.r_indep.assign(static_cast<std::size_t>(n), nan);
  scores.r_comp.assign(static_cast<std::size_t>(n), nan);

  const auto main_members = main.cluster_members();
  const auto loose_members = loose.cluster_members();
  const auto tight_members = tight.cluster_members();

  for (const auto& cluster : main_members) {
    const double indep = set_iou(cluster, cluster_of(loose, cluster.front(), loose_members));
    for (const int i : cluster) {
      scores.r_indep[static_cast<std::size_t>(i)] = indep;
      scores.r_comp[static_cast<std::size_t>(i)] =
          set_iou(cluster, cluster_of(tight, i, tight_members));
    }
  }
  return scores;
}

double calibrate_alpha(const ReliabilityScores& scores, const ClusterPartition& main,
                       double keep_fraction) {
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0) {
    throw ConfigError("keep_fraction must be in (0,1]");
  }
  std::vector<double> values;
  for (int i = 0; i < main.size(); ++i) {
    if (main.label[static_cast<std::size_t>(i)] >= 0) {
      values.push_back(scores.r_indep[static_cast<std::size_t>(i)]);
    }
  }
  if (values.empty()) {
    throw DataError(
        "alpha calibration: no clustered points in epoch 0; raise the clustering "
        "eps (dbscan_eps) or loosen min_pts so the first epoch forms clusters");
  }
  std::sort(values.begin(), values.end());
  const double q = 1.0 - keep_fraction;
  const auto idx = static_cast<std::size_t>(
      std::floor(q * static_cast<double>(values.size() - 1)));
  return values[idx];
}

PseudoLabelState filter_partition(const ClusterPartition& main, const ReliabilityScores& scores,
                                  double alpha, FilterOptions opts) {
  const int n = main.size();
  if (static_cast<int>(scores.r_indep.size()) != n || static_cast<int>(scores.r_comp.size()) != n) {
    throw ContractError("filter_partition: scores do not cover the partition");
  }

  PseudoLabelState state;
  state.assignment.assign(static_cast<std::size_t>(n), -1);

  int next_id = 0;
  for (const auto& cluster : main.cluster_members()) {
    // Independence is shared across the cluster; strict > per the criterion.
    if (opts.use_independence &&
        !(scores.r_indep[static_cast<std::size_t>(cluster.front())] > alpha)) {
      continue;  // disassembled back to outliers
    }
    std::vector<int> kept;
    if (opts.use_compactness) {
      double beta = -1.0;
      for (const int i : cluster) {
        beta = std::max(beta, scores.r_comp[static_cast<std::size_t>(i)]);
      }
      // beta is the per-cluster maximum, so the comparison must be >= to keep
      // the argmax set; strict > would empty every cluster.
      for (const int i : cluster) {
        if (scores.r_comp[static_cast<std::size_t>(i)] >= beta) kept.push_back(i);
      }
    } else {
      kept = cluster;
    }
    if (kept.size() < 2) continue;  // clusters need >= 2 members downstream
    for (const int i : kept) state.assignment[static_cast<std::size_t>(i)] = next_id;
    ++next_id;
  }
  state.n_clusters = next_id;
  state.validate();
  return state;
}

}  // namespace ureid
