#pragma once

#include "ureid/config.hpp"
#include "ureid/trainer.hpp"

#include <string>
#include <vector>

namespace ureid {

// Implementations behind the CLI subcommands; the binary only parses argv.
// Every command is deterministic under a fixed seed and never writes timestamps.

struct SynthArgs {
  std::string config_path;  // optional
  std::vector<std::string> overrides;
  std::string out_src;
  std::string out_tgt;
};
void cmd_synth(const SynthArgs& args);

struct TrainArgs {
  std::string config_path;  // optional
  std::vector<std::string> overrides;
  std::string src_path;  // optional in unsup mode
  std::string tgt_path;
  std::string out_dir;
  bool dump_memory = false;
};
// Writes run_config.txt, encoder.ckpt, report.csv, eval.csv (and
// memory_snapshot.csv on request) into the run directory.
TrainResult cmd_train(const TrainArgs& args);

struct ClusterArgs {
  std::string in_path;
  std::string out_path;
  double eps = 0.6;
  int min_pts = 4;
  int k_reciprocal = 30;
  std::string metric = "jaccard";  // or "cosine"
  bool expand = false;
};
void cmd_cluster(const ClusterArgs& args);

struct EvalArgs {
  std::string checkpoint_path;
  std::string data_path;
  std::string out_path;
  std::uint64_t seed = 1;
  double query_fraction = 0.25;
};
EvalResult cmd_eval(const EvalArgs& args);

struct AblateArgs {
  std::string config_path;  // optional
  std::vector<std::string> overrides;
  std::string src_path;  // optional
  std::string tgt_path;
  std::vector<std::string> variants;
  std::vector<std::uint64_t> seeds;  // empty = config seed
  std::string out_path;
};

struct AblateRow {
  std::string variant;
  std::uint64_t seed = 0;
  double map = 0.0, top1 = 0.0, top5 = 0.0, top10 = 0.0;
  double nmi_clustered = 0.0, nmi_all = 0.0;
};
// One row per (variant, seed) plus a seed-median summary row per variant.
std::vector<AblateRow> cmd_ablate(const AblateArgs& args);

// Variant names: full, no_indep, no_comp, no_both, no_unified,
// no_selfpaced_clusters_only, oracle.
TrainConfig apply_ablation_variant(TrainConfig cfg, const std::string& variant);

// Shared helpers.
KeyValueConfig load_config_with_overrides(const std::string& path,
                                          const std::vector<std::string>& overrides);
EvalResult evaluate_encoder(const Mlp& encoder, const std::vector<SampleRecord>& records,
                            double query_fraction, std::uint64_t seed);

}  // namespace ureid
