#pragma once

#include "ureid/clustering.hpp"
#include "ureid/config.hpp"
#include "ureid/data_model.hpp"
#include "ureid/encoder.hpp"
#include "ureid/eval.hpp"
#include "ureid/loss.hpp"
#include "ureid/memory.hpp"
#include "ureid/rng.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace ureid {

enum class TrainMode { UDA, Unsupervised, Oracle };

TrainMode parse_train_mode(const std::string& s);
std::string to_string(TrainMode mode);

struct TrainConfig {
  TrainMode mode = TrainMode::UDA;
  std::uint64_t seed = 1;
  int epochs = 50;
  int iters_per_epoch = 0;  // 0 = ceil(n_target / target batch size)
  int pretrain_epochs = 0;  // optional source-only warm start

  double lr = 0.00035;
  double lr_decay = 0.1;  // applied every epochs*0.4 epochs (20-of-50 rule, scaled)
  AdamConfig adam;

  double tau = 0.05;
  double momentum_source = 0.2;
  double momentum_target = 0.2;
  bool renorm = true;  // re-normalize memory entries after momentum updates

  DbscanParams dbscan;     // eps 0.6, min_pts 4, delta 0.02
  int k_reciprocal = 30;   // scaled down to ceil(n/10) on small data
  bool kr_expand = false;  // half-k reciprocal-set expansion
  double keep_fraction = 0.9;

  int batch_p = 16;  // pseudo/source classes per batch side
  int batch_k = 4;   // samples per class
  std::vector<int> hidden = {64};
  int feat_dim = 32;

  // Ablation switches.
  bool use_independence = true;
  bool use_compactness = true;
  bool unified_contrast = true;  // off: denominators restricted to the query's segment
  bool use_outliers = true;      // off: un-clustered instances excluded from training

  int target_batch() const { return batch_p * batch_k; }
  int lr_step_epochs() const;  // 20-of-50 rule scaled to `epochs`, min 1
  double lr_at(int epoch) const;

  void validate() const;
  static TrainConfig from_config(const KeyValueConfig& kv);
  KeyValueConfig to_config() const;  // resolved-config echo
};

struct EpochReport {
  int epoch = 0;
  double mean_loss = 0.0;
  int n_clusters_raw = 0;
  int n_clusters_kept = 0;
  int n_outliers = 0;
  double mean_r_indep = 0.0;
  double mean_r_comp = 0.0;
  double alpha = 0.0;
  double lr = 0.0;
  double nmi_clustered = 0.0;
  double nmi_all = 0.0;
};

void write_report_csv(const std::string& path, const std::vector<EpochReport>& reports);

// One mini-batch plan: dense class ids on the source side, instance indices on
// the target side. Target slots fill by uniform passes over pseudo classes:
// a cluster contributes batch_k members, an outlier its single sample.
struct BatchPlan {
  std::vector<int> source_indices;
  std::vector<int> source_classes;
  std::vector<int> target_indices;
};

BatchPlan sample_batch(Rng& rng, const std::vector<std::vector<int>>& source_groups,
                       const PseudoSplit& split, int batch_p, int batch_k, int target_slots,
                       bool use_outliers);

struct TrainResult {
  Mlp encoder;
  std::vector<EpochReport> reports;
  PseudoLabelState final_state;
  double alpha = std::numeric_limits<double>::quiet_NaN();
};

// The alternating loop: cluster the memory's instance features, score + filter
// clusters, rebuild centroids, then iterate encode / loss / optimizer step /
// memory update mini-batches. Deterministic end-to-end for a fixed seed.
class Trainer {
 public:
  Trainer(TrainConfig cfg, const std::vector<SampleRecord>& source,
          const std::vector<SampleRecord>& target);

  EpochReport run_epoch(int epoch);
  TrainResult run();

  const Mlp& encoder() const { return encoder_; }
  const HybridMemory& memory() const { return memory_; }
  const PseudoLabelState& pseudo_state() const { return pseudo_; }
  const std::vector<EpochReport>& reports() const { return reports_; }

  // Written next to the run outputs when a non-finite loss aborts training.
  void set_diagnostics_dir(const std::string& dir) { diag_dir_ = dir; }

 private:
  void pretrain();
  void init_memory();
  PseudoLabelState cluster_and_filter(int epoch, EpochReport& report);
  PseudoLabelState oracle_partition() const;
  void dump_diagnostics(int epoch, int iter, double loss, const BatchPlan& plan) const;

  TrainConfig cfg_;
  bool with_source_ = false;

  Mat src_inputs_;
  std::vector<int> src_classes_;  // dense class ids
  std::vector<std::vector<int>> source_groups_;
  int n_source_classes_ = 0;

  Mat tgt_inputs_;  // training view: inputs only
  // Evaluation-only label path; read by the oracle partition and NMI reporting,
  // never by the loss/batch code.
  std::optional<std::vector<int>> tgt_eval_labels_;

  Mlp encoder_;
  AdamState adam_;
  HybridMemory memory_;
  PseudoLabelState pseudo_;
  std::optional<double> alpha_;
  Rng rng_;
  std::vector<EpochReport> reports_;
  std::string diag_dir_;
};

TrainResult train(const TrainConfig& cfg, const std::vector<SampleRecord>& source,
                  const std::vector<SampleRecord>& target, const std::string& diag_dir = "");

}  // namespace ureid
