#include "ureid/commands.hpp"

#include "ureid/clustering.hpp"
#include "ureid/distance.hpp"
#include "ureid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace ureid {

namespace {

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// Salt so the retrieval split never shares a stream with training draws.
constexpr std::uint64_t kEvalSeedSalt = 0x9d2c5680dcb5e3a1ULL;

}  // namespace

KeyValueConfig load_config_with_overrides(const std::string& path,
                                          const std::vector<std::string>& overrides) {
  KeyValueConfig kv = path.empty() ? KeyValueConfig{} : KeyValueConfig::parse_file(path);
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("override must look like key=value, got `" + item + "`");
    }
    kv.set(item.substr(0, eq), item.substr(eq + 1));
  }
  return kv;
}

void cmd_synth(const SynthArgs& args) {
  const KeyValueConfig kv = load_config_with_overrides(args.config_path, args.overrides);
  const SynthConfig cfg = SynthConfig::from_config(kv);
  const SynthOutput out = generate(cfg);
  save_dataset(args.out_src, out.source, cfg.dim);
  save_dataset(args.out_tgt, out.target, cfg.dim);
}

EvalResult evaluate_encoder(const Mlp& encoder, const std::vector<SampleRecord>& records,
                            double query_fraction, std::uint64_t seed) {
  for (const auto& rec : records) {
    if (rec.gt_label < 0) throw DataError("evaluation needs ground-truth labels on every record");
  }
  const Mat feats = encoder.forward(training_inputs(records));
  std::vector<int> labels, cams;
  labels.reserve(records.size());
  cams.reserve(records.size());
  for (const auto& rec : records) {
    labels.push_back(rec.gt_label);
    cams.push_back(rec.cam_id);
  }
  const RetrievalSplit split = make_retrieval_split(feats, labels, cams, query_fraction, seed);
  return evaluate_retrieval(split);
}

namespace {

void write_eval_rows(std::ofstream& out, const std::string& prefix, const EvalResult& r) {
  out << prefix << "_map," << fmt9(r.mAP) << "\n";
  out << prefix << "_top1," << fmt9(r.cmc1) << "\n";
  out << prefix << "_top5," << fmt9(r.cmc5) << "\n";
  out << prefix << "_top10," << fmt9(r.cmc10) << "\n";
  out << prefix << "_valid_queries," << r.n_valid_queries << "\n";
  out << prefix << "_skipped_queries," << r.n_skipped_queries << "\n";
}

bool all_labeled(const std::vector<SampleRecord>& records) {
  for (const auto& rec : records) {
    if (rec.gt_label < 0) return false;
  }
  return !records.empty();
}

}  // namespace

TrainResult cmd_train(const TrainArgs& args) {
  const KeyValueConfig kv = load_config_with_overrides(args.config_path, args.overrides);
  const TrainConfig cfg = TrainConfig::from_config(kv);

  std::vector<SampleRecord> source;
  if (!args.src_path.empty()) source = load_dataset(args.src_path);
  const std::vector<SampleRecord> target = load_dataset(args.tgt_path);

  std::filesystem::create_directories(args.out_dir);
  {
    std::ofstream echo(args.out_dir + "/run_config.txt", std::ios::binary);
    if (!echo) throw DataError("cannot write run config echo in " + args.out_dir);
    echo << cfg.to_config().render();
  }

  Trainer trainer(cfg, source, target);
  trainer.set_diagnostics_dir(args.out_dir);
  TrainResult result = trainer.run();

  result.encoder.save(args.out_dir + "/encoder.ckpt");
  write_report_csv(args.out_dir + "/report.csv", result.reports);
  if (args.dump_memory) trainer.memory().dump_snapshot(args.out_dir + "/memory_snapshot.csv");

  std::ofstream eval_out(args.out_dir + "/eval.csv", std::ios::binary);
  if (!eval_out) throw DataError("cannot write eval.csv in " + args.out_dir);
  eval_out << "metric,value\n";
  if (all_labeled(target)) {
    write_eval_rows(eval_out, "target",
                    evaluate_encoder(result.encoder, target, 0.25, cfg.seed ^ kEvalSeedSalt));
  }
  if (!source.empty() && all_labeled(source)) {
    write_eval_rows(eval_out, "source",
                    evaluate_encoder(result.encoder, source, 0.25, cfg.seed ^ kEvalSeedSalt));
  }
  return result;
}

void cmd_cluster(const ClusterArgs& args) {
  const std::vector<SampleRecord> records = load_dataset(args.in_path);
  if (records.empty()) throw DataError("cluster: dataset is empty");
  if (args.metric != "jaccard" && args.metric != "cosine") {
    throw ConfigError("cluster: metric must be jaccard or cosine");
  }

  Mat feats = training_inputs(records);
  for (Eigen::Index i = 0; i < feats.rows(); ++i) {
    feats.row(i) = l2_normalized(feats.row(i).transpose()).transpose();
  }
  const Mat cosine = cosine_distance_matrix(feats);
  Mat dist = cosine;
  if (args.metric == "jaccard") {
    const int n = static_cast<int>(feats.rows());
    int k = std::min(args.k_reciprocal,
                     static_cast<int>(std::ceil(static_cast<double>(n) / 10.0)));
    k = std::clamp(k, 1, n - 1);
    dist = jaccard_distance_matrix(k_reciprocal_sets(cosine, k, args.expand));
  }
  const ClusterPartition part = dbscan(dist, args.eps, args.min_pts);

  std::ofstream out(args.out_path, std::ios::binary);
  if (!out) throw DataError("cannot write partition: " + args.out_path);
  out << "sample_id,cluster_id\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    out << records[i].sample_id << ',' << part.label[i] << "\n";
  }
}

EvalResult cmd_eval(const EvalArgs& args) {
  const Mlp encoder = Mlp::load(args.checkpoint_path);
  const std::vector<SampleRecord> records = load_dataset(args.data_path);
  if (records.empty()) throw DataError("eval: dataset is empty");
  const EvalResult result =
      evaluate_encoder(encoder, records, args.query_fraction, args.seed ^ kEvalSeedSalt);
  std::ofstream out(args.out_path, std::ios::binary);
  if (!out) throw DataError("cannot write eval output: " + args.out_path);
  out << "metric,value\n";
  write_eval_rows(out, "target", result);
  return result;
}

TrainConfig apply_ablation_variant(TrainConfig cfg, const std::string& variant) {
  if (variant == "full") return cfg;
  if (variant == "no_indep") {
    cfg.use_independence = false;
  } else if (variant == "no_comp") {
    cfg.use_compactness = false;
  } else if (variant == "no_both") {
    cfg.use_independence = false;
    cfg.use_compactness = false;
  } else if (variant == "no_unified") {
    cfg.unified_contrast = false;
  } else if (variant == "no_selfpaced_clusters_only") {
    cfg.use_outliers = false;
    cfg.use_independence = false;
    cfg.use_compactness = false;
  } else if (variant == "oracle") {
    cfg.mode = TrainMode::Oracle;
  } else {
    throw ConfigError("unknown ablation variant: " + variant);
  }
  return cfg;
}

std::vector<AblateRow> cmd_ablate(const AblateArgs& args) {
  if (args.variants.empty()) throw ConfigError("ablate: variant list is empty");
  const KeyValueConfig kv = load_config_with_overrides(args.config_path, args.overrides);
  const TrainConfig base = TrainConfig::from_config(kv);

  std::vector<SampleRecord> source;
  if (!args.src_path.empty()) source = load_dataset(args.src_path);
  const std::vector<SampleRecord> target = load_dataset(args.tgt_path);

  std::vector<std::uint64_t> seeds = args.seeds;
  if (seeds.empty()) seeds.push_back(base.seed);

  std::vector<AblateRow> rows;
  for (const auto& variant : args.variants) {
    for (const auto seed : seeds) {
      TrainConfig cfg = apply_ablation_variant(base, variant);
      cfg.seed = seed;
      const TrainResult result = train(cfg, source, target);
      AblateRow row;
      row.variant = variant;
      row.seed = seed;
      const EvalResult ev = evaluate_encoder(result.encoder, target, 0.25, seed ^ kEvalSeedSalt);
      row.map = ev.mAP;
      row.top1 = ev.cmc1;
      row.top5 = ev.cmc5;
      row.top10 = ev.cmc10;
      if (!result.reports.empty()) {
        row.nmi_clustered = result.reports.back().nmi_clustered;
        row.nmi_all = result.reports.back().nmi_all;
      }
      rows.push_back(row);
    }
  }

  if (!args.out_path.empty()) {
    std::ofstream out(args.out_path, std::ios::binary);
    if (!out) throw DataError("cannot write ablation table: " + args.out_path);
    out << "variant,seed,map,top1,top5,top10,nmi_clustered,nmi_all\n";
    for (const auto& row : rows) {
      out << row.variant << ',' << row.seed << ',' << fmt9(row.map) << ',' << fmt9(row.top1) << ','
          << fmt9(row.top5) << ',' << fmt9(row.top10) << ',' << fmt9(row.nmi_clustered) << ','
          << fmt9(row.nmi_all) << "\n";
    }
    if (seeds.size() > 1) {
      const auto median_of = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
      };
      for (const auto& variant : args.variants) {
        std::vector<double> map, top1, top5, top10, nmi_c, nmi_a;
        for (const auto& row : rows) {
          if (row.variant != variant) continue;
          map.push_back(row.map);
          top1.push_back(row.top1);
          top5.push_back(row.top5);
          top10.push_back(row.top10);
          nmi_c.push_back(row.nmi_clustered);
          nmi_a.push_back(row.nmi_all);
        }
        out << variant << ",median," << fmt9(median_of(map)) << ',' << fmt9(median_of(top1)) << ','
            << fmt9(median_of(top5)) << ',' << fmt9(median_of(top10)) << ','
            << fmt9(median_of(nmi_c)) << ',' << fmt9(median_of(nmi_a)) << "\n";
      }
    }
  }
  return rows;
}

}  // namespace ureid
