#include "ureid/memory.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>

namespace ureid {

namespace {

// Normalizes, rescuing an exactly-degenerate zero mean with the smallest
// representable jitter along the first axis (logged; training continues).
Vec safe_unit(const Vec& x, const char* what) {
  const double n = x.norm();
  if (std::isfinite(n) && n > 0.0) return x / n;
  if (!std::isfinite(n)) throw NumericError(std::string(what) + ": non-finite vector");
  std::cerr << "[memory] degenerate zero " << what << "; applying minimal jitter\n";
  Vec y = x;
  y[0] += std::numeric_limits<double>::denorm_min();
  return y / y.norm();
}

// Mean of selected rows, accumulated in a fixed order so tests can reproduce
// the arithmetic bit-for-bit.
Vec row_mean(const Mat& m, const std::vector<int>& rows) {
  Vec sum = Vec::Zero(m.cols());
  for (const int r : rows) sum += m.row(r).transpose();
  return sum / static_cast<double>(rows.size());
}

}  // namespace

HybridMemory HybridMemory::init(const Mat& source_features, const std::vector<int>& source_classes,
                                const Mat& target_features, double momentum_source,
                                double momentum_target, bool renormalize) {
  if (momentum_source < 0.0 || momentum_source > 1.0 || momentum_target < 0.0 ||
      momentum_target > 1.0) {
    throw ConfigError("memory momentum coefficients must be in [0,1]");
  }
  if (source_features.rows() != static_cast<Eigen::Index>(source_classes.size())) {
    throw ContractError("memory init: class list length does not match source features");
  }

  HybridMemory mem;
  mem.momentum_source_ = momentum_source;
  mem.momentum_target_ = momentum_target;
  mem.renorm_ = renormalize;

  int n_classes = 0;
  for (const int c : source_classes) {
    if (c < 0) throw ContractError("memory init: negative class id");
    n_classes = std::max(n_classes, c + 1);
  }

  const Eigen::Index dim = source_features.rows() > 0 ? source_features.cols() : target_features.cols();
  mem.centroids_ = Mat::Zero(n_classes, dim);
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < source_classes.size(); ++i) {
    by_class[static_cast<std::size_t>(source_classes[i])].push_back(static_cast<int>(i));
  }
  for (int k = 0; k < n_classes; ++k) {
    const auto& members = by_class[static_cast<std::size_t>(k)];
    if (members.empty()) {
      throw DataError("memory init: source class " + std::to_string(k) + " has no samples");
    }
    const Vec mean = row_mean(source_features, members);
    if (mean.norm() == 0.0) {
      throw DataError("memory init: degenerate zero centroid for class " + std::to_string(k));
    }
    mem.centroids_.row(k) = (mean / mean.norm()).transpose();
  }

  mem.instances_ = target_features;
  return mem;
}

Vec HybridMemory::cluster_centroid(int cluster_id) const {
  const auto it = clusters_.find(cluster_id);
  if (it == clusters_.end()) {
    throw ContractError("unknown cluster id " + std::to_string(cluster_id));
  }
  return safe_unit(row_mean(instances_, it->second), "cluster centroid");
}

Vec HybridMemory::blend(const Vec& old_value, const Vec& incoming, double momentum,
                        bool incoming_is_unit) const {
  if (momentum == 0.0 && incoming_is_unit) return incoming;  // exact replacement
  Vec mixed = momentum * old_value + (1.0 - momentum) * incoming;
  return renorm_ ? safe_unit(mixed, "momentum update") : mixed;
}

void HybridMemory::update_class_centroids(const Mat& features, const std::vector<int>& classes) {
  if (features.rows() != static_cast<Eigen::Index>(classes.size())) {
    throw ContractError("update_class_centroids: class list length mismatch");
  }
  if (momentum_source_ == 1.0) return;  // frozen memory, exact no-op

  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const int k = classes[i];
    if (k < 0 || k >= n_source_classes()) {
      throw ContractError("update_class_centroids: class id out of range: " + std::to_string(k));
    }
    by_class[k].push_back(static_cast<int>(i));
  }
  for (const auto& [k, rows] : by_class) {
    const Vec mean = row_mean(features, rows);
    centroids_.row(k) = blend(centroids_.row(k).transpose(), mean, momentum_source_, rows.size() == 1).transpose();
  }
}

std::set<int> HybridMemory::update_instances(const Mat& features,
                                             const std::vector<int>& instance_indices) {
  if (features.rows() != static_cast<Eigen::Index>(instance_indices.size())) {
    throw ContractError("update_instances: index list length mismatch");
  }
  std::set<int> seen;
  for (const int i : instance_indices) {
    if (i < 0 || i >= n_target_instances()) {
      throw ContractError("update_instances: instance index out of range: " + std::to_string(i));
    }
    if (!seen.insert(i).second) {
      throw ContractError("update_instances: duplicate instance index in batch: " + std::to_string(i));
    }
  }
  if (momentum_target_ == 1.0) return {};  // frozen memory, exact no-op

  for (std::size_t row = 0; row < instance_indices.size(); ++row) {
    const int i = instance_indices[row];
    instances_.row(i) = blend(instances_.row(i).transpose(),
                      features.row(static_cast<Eigen::Index>(row)).transpose(), momentum_target_,
                      /*incoming_is_unit=*/true)
                    .transpose();
  }

  std::set<int> touched;
  for (const auto& [cid, members] : clusters_) {
    for (const int m : members) {
      if (seen.count(m)) {
        touched.insert(cid);
        break;
      }
    }
  }
  return touched;
}

void HybridMemory::rebuild_clusters(const PseudoLabelState& state) {
  if (state.size() != n_target_instances()) {
    throw ContractError("rebuild_clusters: state covers " + std::to_string(state.size()) +
                        " instances, memory holds " + std::to_string(n_target_instances()));
  }
  const PseudoSplit split = split_by_pseudo_label(state);
  clusters_ = split.clusters;
}

void HybridMemory::dump_snapshot(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write memory snapshot: " + path);
  const auto write_row = [&out](const char* tag, int idx, const auto& row) {
    out << tag << ',' << idx;
    char buf[64];
    for (Eigen::Index j = 0; j < row.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", row[j]);
      out << ',' << buf;
    }
    out << "\n";
  };
  for (Eigen::Index k = 0; k < centroids_.rows(); ++k) write_row("class_centroid", static_cast<int>(k), Vec(centroids_.row(k)));
  for (Eigen::Index i = 0; i < instances_.rows(); ++i) write_row("instance", static_cast<int>(i), Vec(instances_.row(i)));
  for (const auto& [cid, members] : clusters_) {
    out << "cluster," << cid;
    for (const int m : members) out << ',' << m;
    out << "\n";
  }
}

}  // namespace ureid
