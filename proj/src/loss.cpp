#include "ureid/loss.hpp"

#include <cmath>

namespace ureid {

PrototypeBank::PrototypeBank(Mat source, Mat clusters, Mat outliers, double temperature)
    : tau_(temperature) {
  if (!(tau_ > 0.0)) throw ConfigError("temperature must be > 0");
  n_source_ = static_cast<int>(source.rows());
  n_cluster_ = static_cast<int>(clusters.rows());
  n_outlier_ = static_cast<int>(outliers.rows());

  Eigen::Index dim = 0;
  for (const Mat* m : {&source, &clusters, &outliers}) {
    if (m->rows() > 0) dim = m->cols();
  }
  all_ = Mat(n_source_ + n_cluster_ + n_outlier_, dim);
  Eigen::Index row = 0;
  for (const Mat* m : {&source, &clusters, &outliers}) {
    if (m->rows() == 0) continue;
    if (m->cols() != dim) throw ContractError("prototype segments have mismatched dimensions");
    all_.middleRows(row, m->rows()) = *m;
    row += m->rows();
  }
  for (Eigen::Index i = 0; i < all_.rows(); ++i) {
    if (!is_unit_norm(Vec(all_.row(i)))) {
      throw ContractError("prototype row " + std::to_string(i) + " is not unit-norm");
    }
  }
}

int PrototypeBank::segment_begin(Segment s) const {
  switch (s) {
    case Segment::SourceClass:
      return 0;
    case Segment::TargetCluster:
      return n_source_;
    case Segment::TargetOutlier:
      return n_source_ + n_cluster_;
  }
  return 0;
}

int PrototypeBank::segment_end(Segment s) const {
  switch (s) {
    case Segment::SourceClass:
      return n_source_;
    case Segment::TargetCluster:
      return n_source_ + n_cluster_;
    case Segment::TargetOutlier:
      return n_source_ + n_cluster_ + n_outlier_;
  }
  return 0;
}

int PrototypeBank::flat_index(PositiveRef ref) const {
  const int begin = segment_begin(ref.segment);
  const int end = segment_end(ref.segment);
  if (ref.index < 0 || begin + ref.index >= end) {
    throw ContractError("positive reference out of segment bounds");
  }
  return begin + ref.index;
}

PrototypeBank make_prototype_bank(const HybridMemory& mem, const PseudoSplit& split,
                                  double temperature, bool include_source,
                                  bool include_outliers) {
  const Mat source = include_source ? mem.class_centroids() : Mat(0, mem.feature_dim());

  Mat clusters(static_cast<Eigen::Index>(split.clusters.size()), mem.feature_dim());
  Eigen::Index row = 0;
  for (const auto& [cid, members] : split.clusters) {
    (void)members;
    clusters.row(row++) = mem.cluster_centroid(cid).transpose();
  }

  std::vector<int> outlier_instances;
  Mat outliers(0, mem.feature_dim());
  if (include_outliers) {
    outliers.resize(static_cast<Eigen::Index>(split.outliers.size()), mem.feature_dim());
    for (std::size_t i = 0; i < split.outliers.size(); ++i) {
      outliers.row(static_cast<Eigen::Index>(i)) = mem.instance_features().row(split.outliers[i]);
      outlier_instances.push_back(split.outliers[i]);
    }
  }

  PrototypeBank bank(source, clusters, outliers, temperature);
  bank.outlier_instances_ = std::move(outlier_instances);
  return bank;
}

PrototypeBank unsupervised_bank(const PrototypeBank& bank) {
  PrototypeBank reduced = bank;
  if (reduced.n_source_ == 0) return reduced;
  reduced.all_ = bank.all_.bottomRows(bank.n_cluster_ + bank.n_outlier_).eval();
  reduced.n_source_ = 0;
  return reduced;
}

namespace {

struct Softmax {
  double loss = 0.0;
  int begin = 0;
  int end = 0;
  Vec probs;  // over [begin, end)
};

Softmax stable_softmax(const Vec& f, const PrototypeBank& bank, PositiveRef pos, bool restrict_seg,
                       bool want_probs) {
  if (bank.size() == 0) throw ContractError("unified_loss: empty prototype bank");
  if (f.size() != bank.prototypes().cols()) {
    throw ContractError("unified_loss: feature dimension does not match bank");
  }
  const int pos_flat = bank.flat_index(pos);

  Softmax out;
  out.begin = restrict_seg ? bank.segment_begin(pos.segment) : 0;
  out.end = restrict_seg ? bank.segment_end(pos.segment) : bank.size();
  const int n = out.end - out.begin;

  Vec logits(n);
  for (int j = 0; j < n; ++j) {
    logits[j] = bank.prototypes().row(out.begin + j).dot(f) / bank.temperature();
  }
  const double max_logit = logits.maxCoeff();
  double denom = 0.0;
  for (int j = 0; j < n; ++j) denom += std::exp(logits[j] - max_logit);

  const double pos_logit = logits[pos_flat - out.begin];
  out.loss = std::max(0.0, std::log(denom) + max_logit - pos_logit);
  if (want_probs) {
    out.probs = Vec(n);
    for (int j = 0; j < n; ++j) out.probs[j] = std::exp(logits[j] - max_logit) / denom;
  }
  return out;
}

}  // namespace

double unified_loss(const Vec& f, const PrototypeBank& bank, PositiveRef pos,
                    bool restrict_to_own_segment) {
  return stable_softmax(f, bank, pos, restrict_to_own_segment, false).loss;
}

Vec unified_loss_grad(const Vec& f, const PrototypeBank& bank, PositiveRef pos,
                      bool restrict_to_own_segment) {
  const Softmax sm = stable_softmax(f, bank, pos, restrict_to_own_segment, true);
  Vec grad = Vec::Zero(f.size());
  for (int j = 0; j < sm.end - sm.begin; ++j) {
    grad += sm.probs[j] * bank.prototypes().row(sm.begin + j).transpose();
  }
  grad -= bank.prototypes().row(bank.flat_index(pos)).transpose();
  return grad / bank.temperature();
}

BatchLossResult batch_loss(const Mat& features, const PrototypeBank& bank,
                           const std::vector<PositiveRef>& positives,
                           const std::vector<Segment>& roles, bool restrict_to_own_segment) {
  const auto n = features.rows();
  if (n != static_cast<Eigen::Index>(positives.size()) ||
      n != static_cast<Eigen::Index>(roles.size())) {
    throw ContractError("batch_loss: features/positives/roles length mismatch");
  }
  if (n == 0) throw ContractError("batch_loss: empty batch");

  BatchLossResult result;
  result.feature_grads = Mat::Zero(n, features.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    if (positives[idx].segment != roles[idx]) {
      throw ContractError("batch_loss: positive segment does not match query role at row " +
                          std::to_string(i));
    }
    const Vec f = features.row(i).transpose();
    total += unified_loss(f, bank, positives[idx], restrict_to_own_segment);
    result.feature_grads.row(i) =
        unified_loss_grad(f, bank, positives[idx], restrict_to_own_segment).transpose() /
        static_cast<double>(n);
  }
  result.mean_loss = total / static_cast<double>(n);
  return result;
}

}  // namespace ureid
