#include "ureid/trainer.hpp"

#include "ureid/distance.hpp"
#include "ureid/selfpaced.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

namespace ureid {

TrainMode parse_train_mode(const std::string& s) {
  if (s == "uda") return TrainMode::UDA;
  if (s == "unsup") return TrainMode::Unsupervised;
  if (s == "oracle") return TrainMode::Oracle;
  throw ConfigError("mode must be one of uda|unsup|oracle, got `" + s + "`");
}

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::UDA:
      return "uda";
    case TrainMode::Unsupervised:
      return "unsup";
    case TrainMode::Oracle:
      return "oracle";
  }
  return "uda";
}

int TrainConfig::lr_step_epochs() const {
  // 1/10 every 20 epochs of a 50-epoch run, scaled proportionally.
  return std::max(1, static_cast<int>(std::llround(static_cast<double>(epochs) * 20.0 / 50.0)));
}

double TrainConfig::lr_at(int epoch) const {
  return lr * std::pow(lr_decay, static_cast<double>(epoch / lr_step_epochs()));
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (iters_per_epoch < 0) throw ConfigError("iters_per_epoch must be >= 0");
  if (pretrain_epochs < 0) throw ConfigError("pretrain_epochs must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(lr_decay > 0.0) || lr_decay > 1.0) throw ConfigError("lr_decay must be in (0,1]");
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  if (momentum_source < 0.0 || momentum_source > 1.0 || momentum_target < 0.0 || momentum_target > 1.0) {
    throw ConfigError("momentum coefficients must be in [0,1]");
  }
  dbscan.validate();
  if (k_reciprocal < 1) throw ConfigError("k_reciprocal must be >= 1");
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0) throw ConfigError("keep_fraction in (0,1]");
  if (batch_p < 1 || batch_k < 1) throw ConfigError("batch_p and batch_k must be >= 1");
  if (feat_dim < 1) throw ConfigError("feat_dim must be >= 1");
  for (const int h : hidden) {
    if (h < 1) throw ConfigError("hidden layer sizes must be >= 1");
  }
}

namespace {

const std::set<std::string>& train_config_keys() {
  static const std::set<std::string> keys = {
      "mode",        "seed",          "epochs",        "iters_per_epoch", "pretrain_epochs",
      "lr",          "lr_decay",      "weight_decay",  "adam_beta1",      "adam_beta2",
      "adam_eps",    "tau",           "momentum_source",           "momentum_target",             "renorm",
      "dbscan_eps",    "dbscan_min_pts", "dbscan_delta", "k_reciprocal",    "kr_expand",
      "keep_fraction", "batch_p",     "batch_k",       "hidden",          "feat_dim",
      "use_independence", "use_compactness", "unified_contrast", "use_outliers"};
  return keys;
}

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

TrainConfig TrainConfig::from_config(const KeyValueConfig& kv) {
  kv.check_known(train_config_keys());
  TrainConfig cfg;
  cfg.mode = parse_train_mode(kv.get_string("mode", to_string(cfg.mode)));
  cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(cfg.seed)));
  cfg.epochs = static_cast<int>(kv.get_int("epochs", cfg.epochs));
  cfg.iters_per_epoch = static_cast<int>(kv.get_int("iters_per_epoch", cfg.iters_per_epoch));
  cfg.pretrain_epochs = static_cast<int>(kv.get_int("pretrain_epochs", cfg.pretrain_epochs));
  cfg.lr = kv.get_double("lr", cfg.lr);
  cfg.lr_decay = kv.get_double("lr_decay", cfg.lr_decay);
  cfg.adam.weight_decay = kv.get_double("weight_decay", cfg.adam.weight_decay);
  cfg.adam.beta1 = kv.get_double("adam_beta1", cfg.adam.beta1);
  cfg.adam.beta2 = kv.get_double("adam_beta2", cfg.adam.beta2);
  cfg.adam.eps = kv.get_double("adam_eps", cfg.adam.eps);
  cfg.tau = kv.get_double("tau", cfg.tau);
  cfg.momentum_source = kv.get_double("momentum_source", cfg.momentum_source);
  cfg.momentum_target = kv.get_double("momentum_target", cfg.momentum_target);
  cfg.renorm = kv.get_bool("renorm", cfg.renorm);
  cfg.dbscan.eps = kv.get_double("dbscan_eps", cfg.dbscan.eps);
  cfg.dbscan.min_pts = static_cast<int>(kv.get_int("dbscan_min_pts", cfg.dbscan.min_pts));
  cfg.dbscan.delta = kv.get_double("dbscan_delta", cfg.dbscan.delta);
  cfg.k_reciprocal = static_cast<int>(kv.get_int("k_reciprocal", cfg.k_reciprocal));
  cfg.kr_expand = kv.get_bool("kr_expand", cfg.kr_expand);
  cfg.keep_fraction = kv.get_double("keep_fraction", cfg.keep_fraction);
  cfg.batch_p = static_cast<int>(kv.get_int("batch_p", cfg.batch_p));
  cfg.batch_k = static_cast<int>(kv.get_int("batch_k", cfg.batch_k));
  cfg.hidden = kv.get_int_list("hidden", cfg.hidden);
  cfg.feat_dim = static_cast<int>(kv.get_int("feat_dim", cfg.feat_dim));
  cfg.use_independence = kv.get_bool("use_independence", cfg.use_independence);
  cfg.use_compactness = kv.get_bool("use_compactness", cfg.use_compactness);
  cfg.unified_contrast = kv.get_bool("unified_contrast", cfg.unified_contrast);
  cfg.use_outliers = kv.get_bool("use_outliers", cfg.use_outliers);
  cfg.validate();
  return cfg;
}

KeyValueConfig TrainConfig::to_config() const {
  KeyValueConfig kv;
  kv.set("mode", to_string(mode));
  kv.set("seed", std::to_string(seed));
  kv.set("epochs", std::to_string(epochs));
  kv.set("iters_per_epoch", std::to_string(iters_per_epoch));
  kv.set("pretrain_epochs", std::to_string(pretrain_epochs));
  kv.set("lr", fmt9(lr));
  kv.set("lr_decay", fmt9(lr_decay));
  kv.set("weight_decay", fmt9(adam.weight_decay));
  kv.set("adam_beta1", fmt9(adam.beta1));
  kv.set("adam_beta2", fmt9(adam.beta2));
  kv.set("adam_eps", fmt9(adam.eps));
  kv.set("tau", fmt9(tau));
  kv.set("momentum_source", fmt9(momentum_source));
  kv.set("momentum_target", fmt9(momentum_target));
  kv.set("renorm", renorm ? "true" : "false");
  kv.set("dbscan_eps", fmt9(dbscan.eps));
  kv.set("dbscan_min_pts", std::to_string(dbscan.min_pts));
  kv.set("dbscan_delta", fmt9(dbscan.delta));
  kv.set("k_reciprocal", std::to_string(k_reciprocal));
  kv.set("kr_expand", kr_expand ? "true" : "false");
  kv.set("keep_fraction", fmt9(keep_fraction));
  kv.set("batch_p", std::to_string(batch_p));
  kv.set("batch_k", std::to_string(batch_k));
  std::string h;
  for (const int s : hidden) h += (h.empty() ? "" : ",") + std::to_string(s);
  kv.set("hidden", h);
  kv.set("feat_dim", std::to_string(feat_dim));
  kv.set("use_independence", use_independence ? "true" : "false");
  kv.set("use_compactness", use_compactness ? "true" : "false");
  kv.set("unified_contrast", unified_contrast ? "true" : "false");
  kv.set("use_outliers", use_outliers ? "true" : "false");
  return kv;
}

void write_report_csv(const std::string& path, const std::vector<EpochReport>& reports) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write report: " + path);
  out << "epoch,mean_loss,n_clusters_raw,n_clusters_kept,n_outliers,"
         "mean_r_indep,mean_r_comp,alpha,lr,nmi_clustered,nmi_all\n";
  for (const auto& r : reports) {
    out << r.epoch << ',' << fmt9(r.mean_loss) << ',' << r.n_clusters_raw << ','
        << r.n_clusters_kept << ',' << r.n_outliers << ',' << fmt9(r.mean_r_indep) << ','
        << fmt9(r.mean_r_comp) << ',' << fmt9(r.alpha) << ',' << fmt9(r.lr) << ','
        << fmt9(r.nmi_clustered) << ',' << fmt9(r.nmi_all) << "\n";
  }
}

BatchPlan sample_batch(Rng& rng, const std::vector<std::vector<int>>& source_groups,
                       const PseudoSplit& split, int batch_p, int batch_k, int target_slots,
                       bool use_outliers) {
  BatchPlan plan;

  if (!source_groups.empty()) {
    const int n_classes = static_cast<int>(source_groups.size());
    if (n_classes < batch_p) {
      throw ContractError("sample_batch: need at least " + std::to_string(batch_p) +
                          " source classes, have " + std::to_string(n_classes));
    }
    const std::vector<int> chosen = rng.sample_without_replacement(n_classes, batch_p);
    for (const int c : chosen) {
      const auto& members = source_groups[static_cast<std::size_t>(c)];
      const int m = static_cast<int>(members.size());
      if (m >= batch_k) {
        for (const int pick : rng.sample_without_replacement(m, batch_k)) {
          plan.source_indices.push_back(members[static_cast<std::size_t>(pick)]);
          plan.source_classes.push_back(c);
        }
      } else {
        for (int t = 0; t < batch_k; ++t) {  // with replacement when the class is small
          plan.source_indices.push_back(
              members[static_cast<std::size_t>(rng.uniform_int(static_cast<std::uint64_t>(m)))]);
          plan.source_classes.push_back(c);
        }
      }
    }
  }

  // Pseudo classes: clusters first (descriptor = cluster id), then each outlier
  // as its own single-sample class.
  struct PseudoClass {
    bool is_cluster;
    int id;  // cluster id or instance index
  };
  std::vector<PseudoClass> classes;
  for (const auto& [cid, members] : split.clusters) {
    (void)members;
    classes.push_back({true, cid});
  }
  if (use_outliers) {
    for (const int i : split.outliers) classes.push_back({false, i});
  }
  if (classes.empty()) {
    throw ContractError("sample_batch: no target pseudo classes available");
  }

  int need = target_slots;
  while (need > 0) {
    std::vector<int> perm(classes.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    rng.shuffle(perm);
    for (const int ci : perm) {
      const PseudoClass& cls = classes[static_cast<std::size_t>(ci)];
      if (cls.is_cluster) {
        const auto& members = split.clusters.at(cls.id);
        const int m = static_cast<int>(members.size());
        const int take = std::min(batch_k, need);
        if (m >= take) {
          for (const int pick : rng.sample_without_replacement(m, take)) {
            plan.target_indices.push_back(members[static_cast<std::size_t>(pick)]);
          }
        } else {
          for (int t = 0; t < take; ++t) {
            plan.target_indices.push_back(
                members[static_cast<std::size_t>(rng.uniform_int(static_cast<std::uint64_t>(m)))]);
          }
        }
        need -= take;
      } else {
        plan.target_indices.push_back(cls.id);
        need -= 1;
      }
      if (need == 0) break;
    }
  }
  return plan;
}

Trainer::Trainer(TrainConfig cfg, const std::vector<SampleRecord>& source,
                 const std::vector<SampleRecord>& target)
    : cfg_(std::move(cfg)),
      encoder_({1, 1}),  // replaced below once dimensions are known
      memory_(HybridMemory::init(Mat(0, 1), {}, Mat(0, 1), 0.2, 0.2)),
      rng_(0) {
  cfg_.validate();
  if (target.empty()) throw DataError("trainer: target dataset is empty");
  if (cfg_.mode == TrainMode::UDA && source.empty()) {
    throw DataError("trainer: UDA mode needs a source dataset");
  }
  with_source_ = cfg_.mode != TrainMode::Unsupervised && !source.empty();

  tgt_inputs_ = training_inputs(target);

  bool have_labels = true;
  for (const auto& rec : target) have_labels = have_labels && rec.gt_label >= 0;
  if (have_labels) tgt_eval_labels_ = evaluation_labels(target);
  if (cfg_.mode == TrainMode::Oracle && !have_labels) {
    throw ConfigError("oracle mode needs ground-truth labels on every target record");
  }

  if (with_source_) {
    src_inputs_ = training_inputs(source);
    if (src_inputs_.cols() != tgt_inputs_.cols()) {
      throw DataError("source and target input dimensions differ");
    }
    // Dense class ids in ascending label order.
    std::map<int, int> label_to_class;
    for (const auto& rec : source) label_to_class.emplace(rec.gt_label, 0);
    int next = 0;
    for (auto& [label, cls] : label_to_class) {
      (void)label;
      cls = next++;
    }
    n_source_classes_ = next;
    src_classes_.reserve(source.size());
    source_groups_.assign(static_cast<std::size_t>(n_source_classes_), {});
    for (std::size_t i = 0; i < source.size(); ++i) {
      const int cls = label_to_class.at(source[i].gt_label);
      src_classes_.push_back(cls);
      source_groups_[static_cast<std::size_t>(cls)].push_back(static_cast<int>(i));
    }
    if (n_source_classes_ < cfg_.batch_p) {
      throw ConfigError("source domain has " + std::to_string(n_source_classes_) +
                        " classes, batch needs " + std::to_string(cfg_.batch_p));
    }
  }

  std::vector<int> sizes;
  sizes.push_back(static_cast<int>(tgt_inputs_.cols()));
  for (const int h : cfg_.hidden) sizes.push_back(h);
  sizes.push_back(cfg_.feat_dim);
  encoder_ = Mlp(sizes);
  rng_ = Rng(cfg_.seed);
  encoder_.init_random(rng_);
  adam_ = AdamState::init(encoder_, cfg_.adam);

  if (with_source_ && cfg_.pretrain_epochs > 0) pretrain();
  init_memory();
}

void Trainer::pretrain() {
  // Source-only warm start: class centroids are the only prototypes.
  Mat feats = encoder_.forward(src_inputs_);
  HybridMemory mem = HybridMemory::init(feats, src_classes_, Mat(0, cfg_.feat_dim), cfg_.momentum_source,
                                        cfg_.momentum_target, cfg_.renorm);
  const int iters = std::max(
      1, static_cast<int>(std::ceil(static_cast<double>(src_inputs_.rows()) / cfg_.target_batch())));
  for (int epoch = 0; epoch < cfg_.pretrain_epochs; ++epoch) {
    for (int it = 0; it < iters; ++it) {
      const BatchPlan plan =
          sample_batch(rng_, source_groups_, PseudoSplit{{}, {0}}, cfg_.batch_p, cfg_.batch_k,
                       /*target_slots=*/0, true);
      Mat batch(static_cast<Eigen::Index>(plan.source_indices.size()), src_inputs_.cols());
      for (std::size_t i = 0; i < plan.source_indices.size(); ++i) {
        batch.row(static_cast<Eigen::Index>(i)) = src_inputs_.row(plan.source_indices[i]);
      }
      Mlp::ForwardCache cache;
      const Mat f = encoder_.forward(batch, &cache);
      const PrototypeBank bank(mem.class_centroids(), Mat(0, cfg_.feat_dim), Mat(0, cfg_.feat_dim),
                               cfg_.tau);
      std::vector<PositiveRef> positives;
      std::vector<Segment> roles;
      for (const int cls : plan.source_classes) {
        positives.push_back({Segment::SourceClass, cls});
        roles.push_back(Segment::SourceClass);
      }
      const BatchLossResult res = batch_loss(f, bank, positives, roles, !cfg_.unified_contrast);
      if (!std::isfinite(res.mean_loss)) throw NumericError("pretrain: non-finite loss");
      const Mlp::Gradients grads = encoder_.backward(cache, res.feature_grads);
      adam_step(encoder_, grads, adam_, cfg_.lr);
      mem.update_class_centroids(f, plan.source_classes);
    }
  }
}

void Trainer::init_memory() {
  Mat src_feats(0, cfg_.feat_dim);
  std::vector<int> src_classes;
  if (with_source_) {
    src_feats = encoder_.forward(src_inputs_);
    src_classes = src_classes_;
  }
  const Mat tgt_feats = encoder_.forward(tgt_inputs_);
  memory_ = HybridMemory::init(src_feats, src_classes, tgt_feats, cfg_.momentum_source, cfg_.momentum_target, cfg_.renorm);
  pseudo_ = PseudoLabelState{std::vector<int>(static_cast<std::size_t>(tgt_inputs_.rows()), -1), 0};
}

PseudoLabelState Trainer::oracle_partition() const {
  const auto& labels = *tgt_eval_labels_;
  std::map<int, std::vector<int>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(static_cast<int>(i));
  PseudoLabelState state;
  state.assignment.assign(labels.size(), -1);
  int next = 0;
  for (const auto& [label, members] : groups) {
    (void)label;
    if (members.size() < 2) continue;  // singleton identities stay outliers
    for (const int i : members) state.assignment[static_cast<std::size_t>(i)] = next;
    ++next;
  }
  state.n_clusters = next;
  state.validate();
  return state;
}

PseudoLabelState Trainer::cluster_and_filter(int epoch, EpochReport& report) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (cfg_.mode == TrainMode::Oracle) {
    const PseudoLabelState state = oracle_partition();
    report.n_clusters_raw = state.n_clusters;
    report.n_clusters_kept = state.n_clusters;
    report.n_outliers = state.n_outliers();
    report.mean_r_indep = nan;
    report.mean_r_comp = nan;
    report.alpha = nan;
    return state;
  }

  const int n = memory_.n_target_instances();
  const Mat dist = cosine_distance_matrix(memory_.instance_features());
  int k = std::min(cfg_.k_reciprocal, static_cast<int>(std::ceil(static_cast<double>(n) / 10.0)));
  k = std::clamp(k, 1, n - 1);
  const auto sets = k_reciprocal_sets(dist, k, cfg_.kr_expand);
  const Mat jdist = jaccard_distance_matrix(sets);
  const ThreeScalePartitions parts = cluster_at_three_scales(jdist, cfg_.dbscan);
  const ReliabilityScores scores = compute_reliability(parts.main, parts.loose, parts.tight);

  report.n_clusters_raw = parts.main.n_clusters;
  double sum_i = 0.0, sum_c = 0.0;
  int n_scored = 0;
  for (int i = 0; i < n; ++i) {
    if (scores.scored(i)) {
      sum_i += scores.r_indep[static_cast<std::size_t>(i)];
      sum_c += scores.r_comp[static_cast<std::size_t>(i)];
      ++n_scored;
    }
  }
  report.mean_r_indep = n_scored ? sum_i / n_scored : nan;
  report.mean_r_comp = n_scored ? sum_c / n_scored : nan;

  if (!alpha_.has_value() && cfg_.use_independence) {
    if (epoch == 0 && n_scored < n / 10) {
      std::cerr << "[trainer] warning: only " << n_scored << "/" << n
                << " target instances clustered before alpha calibration; "
                   "consider raising dbscan_eps\n";
    }
    alpha_ = calibrate_alpha(scores, parts.main, cfg_.keep_fraction);
  }
  report.alpha = alpha_.value_or(nan);

  return filter_partition(parts.main, scores, alpha_.value_or(-1.0),
                          FilterOptions{cfg_.use_independence, cfg_.use_compactness});
}

EpochReport Trainer::run_epoch(int epoch) {
  EpochReport report;
  report.epoch = epoch;
  report.lr = cfg_.lr_at(epoch);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  pseudo_ = cluster_and_filter(epoch, report);
  memory_.rebuild_clusters(pseudo_);
  report.n_clusters_kept = pseudo_.n_clusters;
  report.n_outliers = pseudo_.n_outliers();
  const PseudoSplit split = split_by_pseudo_label(pseudo_);

  if (tgt_eval_labels_) {
    const NmiPair scores = pseudo_label_nmi(pseudo_, *tgt_eval_labels_);
    report.nmi_clustered = scores.clustered_only;
    report.nmi_all = scores.all_points;
  } else {
    report.nmi_clustered = nan;
    report.nmi_all = nan;
  }

  const std::size_t n_pseudo =
      split.clusters.size() + (cfg_.use_outliers ? split.outliers.size() : 0);
  if (n_pseudo == 0) {
    // Nothing trainable this epoch (clusters-only run with no surviving cluster).
    std::cerr << "[trainer] epoch " << epoch << ": no pseudo classes, skipping updates\n";
    report.mean_loss = nan;
    return report;
  }

  const int n_t = memory_.n_target_instances();
  const int iters =
      cfg_.iters_per_epoch > 0
          ? cfg_.iters_per_epoch
          : static_cast<int>(std::ceil(static_cast<double>(n_t) / cfg_.target_batch()));

  double loss_sum = 0.0;
  for (int it = 0; it < iters; ++it) {
    const BatchPlan plan =
        sample_batch(rng_, with_source_ ? source_groups_ : std::vector<std::vector<int>>{}, split,
                     cfg_.batch_p, cfg_.batch_k, cfg_.target_batch(), cfg_.use_outliers);

    const auto n_src = static_cast<Eigen::Index>(plan.source_indices.size());
    const auto n_tgt = static_cast<Eigen::Index>(plan.target_indices.size());

    Mat src_batch(n_src, tgt_inputs_.cols());
    for (Eigen::Index i = 0; i < n_src; ++i) {
      src_batch.row(i) = src_inputs_.row(plan.source_indices[static_cast<std::size_t>(i)]);
    }
    Mat tgt_batch(n_tgt, tgt_inputs_.cols());
    for (Eigen::Index i = 0; i < n_tgt; ++i) {
      tgt_batch.row(i) = tgt_inputs_.row(plan.target_indices[static_cast<std::size_t>(i)]);
    }

    Mlp::ForwardCache src_cache, tgt_cache;
    Mat src_feats(0, cfg_.feat_dim);
    if (n_src > 0) src_feats = encoder_.forward(src_batch, &src_cache);
    const Mat tgt_feats = encoder_.forward(tgt_batch, &tgt_cache);

    const PrototypeBank bank =
        make_prototype_bank(memory_, split, cfg_.tau, with_source_, cfg_.use_outliers);
#ifndef NDEBUG
    if (!split.clusters.empty()) {
      // Bank/memory consistency: the first cluster centroid must equal a fresh
      // recomputation from the current v.
      const int first_cid = split.clusters.begin()->first;
      const Vec fresh = memory_.cluster_centroid(first_cid);
      assert((bank.prototypes().row(bank.segment_begin(Segment::TargetCluster)).transpose() - fresh)
                 .norm() < 1e-12);
    }
#endif
    std::map<int, int> outlier_pos;
    for (std::size_t p = 0; p < bank.outlier_instances().size(); ++p) {
      outlier_pos[bank.outlier_instances()[p]] = static_cast<int>(p);
    }

    Mat all_feats(n_src + n_tgt, cfg_.feat_dim);
    if (n_src > 0) all_feats.topRows(n_src) = src_feats;
    all_feats.bottomRows(n_tgt) = tgt_feats;

    std::vector<PositiveRef> positives;
    std::vector<Segment> roles;
    positives.reserve(static_cast<std::size_t>(n_src + n_tgt));
    for (const int cls : plan.source_classes) {
      positives.push_back({Segment::SourceClass, cls});
      roles.push_back(Segment::SourceClass);
    }
    for (const int idx : plan.target_indices) {
      const int assignment = pseudo_.assignment[static_cast<std::size_t>(idx)];
      if (assignment >= 0) {
        positives.push_back({Segment::TargetCluster, assignment});
        roles.push_back(Segment::TargetCluster);
      } else {
        positives.push_back({Segment::TargetOutlier, outlier_pos.at(idx)});
        roles.push_back(Segment::TargetOutlier);
      }
    }

    const BatchLossResult res = batch_loss(all_feats, bank, positives, roles, !cfg_.unified_contrast);
    if (!std::isfinite(res.mean_loss)) {
      dump_diagnostics(epoch, it, res.mean_loss, plan);
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", iteration " +
                         std::to_string(it));
    }
    loss_sum += res.mean_loss;

    Mlp::Gradients grads = encoder_.zero_gradients();
    if (n_src > 0) grads += encoder_.backward(src_cache, res.feature_grads.topRows(n_src));
    grads += encoder_.backward(tgt_cache, res.feature_grads.bottomRows(n_tgt));
    adam_step(encoder_, grads, adam_, report.lr);

    if (n_src > 0) memory_.update_class_centroids(src_feats, plan.source_classes);

    // Instances drawn twice in one batch update the memory once (last wins).
    std::map<int, int> last_row;
    for (std::size_t row = 0; row < plan.target_indices.size(); ++row) {
      last_row[plan.target_indices[row]] = static_cast<int>(row);
    }
    Mat unique_feats(static_cast<Eigen::Index>(last_row.size()), cfg_.feat_dim);
    std::vector<int> unique_idx;
    Eigen::Index r = 0;
    for (const auto& [idx, row] : last_row) {
      unique_idx.push_back(idx);
      unique_feats.row(r++) = tgt_feats.row(row);
    }
    memory_.update_instances(unique_feats, unique_idx);
  }
  report.mean_loss = loss_sum / iters;
  return report;
}

TrainResult Trainer::run() {
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    reports_.push_back(run_epoch(epoch));
  }
  TrainResult result{encoder_, reports_, pseudo_,
                     alpha_.value_or(std::numeric_limits<double>::quiet_NaN())};
  return result;
}

void Trainer::dump_diagnostics(int epoch, int iter, double loss, const BatchPlan& plan) const {
  if (diag_dir_.empty()) return;
  std::ofstream out(diag_dir_ + "/diagnostic_dump.txt", std::ios::binary);
  if (!out) return;
  out << "non-finite loss\nepoch " << epoch << "\niteration " << iter << "\nloss " << loss << "\n";
  out << "encoder_finite " << (encoder_.all_finite() ? "yes" : "no") << "\n";
  out << "source_batch";
  for (const int i : plan.source_indices) out << ' ' << i;
  out << "\ntarget_batch";
  for (const int i : plan.target_indices) out << ' ' << i;
  out << "\n";
}

TrainResult train(const TrainConfig& cfg, const std::vector<SampleRecord>& source,
                  const std::vector<SampleRecord>& target, const std::string& diag_dir) {
  Trainer trainer(cfg, source, target);
  if (!diag_dir.empty()) trainer.set_diagnostics_dir(diag_dir);
  return trainer.run();
}

}  // namespace ureid
