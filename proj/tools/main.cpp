#include "ureid/commands.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

namespace {

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(csv);
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-paced contrastive representation learning on synthetic two-domain data"};
  app.require_subcommand(1);

  ureid::SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic two-domain dataset");
  synth->add_option("--config", synth_args.config_path, "Flat key=value config file");
  synth->add_option("--set", synth_args.overrides, "Override config entries, key=value")
      ->take_all();
  synth->add_option("--out-src", synth_args.out_src, "Output CSV for the source domain")
      ->required();
  synth->add_option("--out-tgt", synth_args.out_tgt, "Output CSV for the target domain")
      ->required();

  ureid::TrainArgs train_args;
  std::string train_mode, train_seed, train_epochs;
  auto* train = app.add_subcommand("train", "Run the alternating clustering/contrastive loop");
  train->add_option("--config", train_args.config_path, "Flat key=value config file");
  train->add_option("--set", train_args.overrides, "Override config entries, key=value")
      ->take_all();
  train->add_option("--mode", train_mode, "uda|unsup|oracle (overrides config)");
  train->add_option("--seed", train_seed, "Seed (overrides config)");
  train->add_option("--epochs", train_epochs, "Epoch count (overrides config)");
  train->add_option("--src", train_args.src_path, "Source-domain CSV (optional in unsup mode)");
  train->add_option("--tgt", train_args.tgt_path, "Target-domain CSV")->required();
  train->add_option("--out", train_args.out_dir, "Run output directory")->required();
  train->add_flag("--dump-memory", train_args.dump_memory, "Write a memory snapshot CSV");
  bool no_renorm = false;
  train->add_flag("--no-renorm", no_renorm,
                  "Keep the literal momentum updates (no re-normalization of memory rows)");

  ureid::ClusterArgs cluster_args;
  auto* cluster = app.add_subcommand("cluster", "Cluster a dataset CSV with DBSCAN");
  cluster->add_option("--in", cluster_args.in_path, "Input dataset CSV")->required();
  cluster->add_option("--out", cluster_args.out_path, "Output partition CSV")->required();
  cluster->add_option("--d", cluster_args.eps, "Maximum neighbor distance (default 0.6)");
  cluster->add_option("--min-pts", cluster_args.min_pts, "Core-point neighbor count (default 4)");
  cluster->add_option("--k", cluster_args.k_reciprocal,
                      "k for reciprocal-neighbor sets (default 30, auto-scaled)");
  cluster->add_option("--metric", cluster_args.metric, "jaccard (default) or cosine");
  cluster->add_flag("--expand", cluster_args.expand, "Half-k reciprocal-set expansion");

  ureid::EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a labeled dataset");
  eval->add_option("--checkpoint", eval_args.checkpoint_path, "Encoder checkpoint")->required();
  eval->add_option("--data", eval_args.data_path, "Dataset CSV with labels")->required();
  eval->add_option("--out", eval_args.out_path, "Output metrics CSV")->required();
  eval->add_option("--seed", eval_args.seed, "Query/gallery split seed");
  eval->add_option("--query-fraction", eval_args.query_fraction,
                   "Per-identity query fraction (default 0.25)");

  ureid::AblateArgs ablate_args;
  std::string variants_csv = "full";
  std::string seeds_csv;
  auto* ablate = app.add_subcommand("ablate", "Train a set of ablation variants and tabulate");
  ablate->add_option("--config", ablate_args.config_path, "Flat key=value config file");
  ablate->add_option("--set", ablate_args.overrides, "Override config entries, key=value")
      ->take_all();
  ablate->add_option("--src", ablate_args.src_path, "Source-domain CSV (optional)");
  ablate->add_option("--tgt", ablate_args.tgt_path, "Target-domain CSV")->required();
  ablate->add_option("--variants", variants_csv,
                     "Comma list of full,no_indep,no_comp,no_both,no_unified,"
                     "no_selfpaced_clusters_only,oracle");
  ablate->add_option("--seeds", seeds_csv, "Comma list of seeds (default: config seed)");
  ablate->add_option("--out", ablate_args.out_path, "Output comparison CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) ureid::cmd_synth(synth_args);
    if (*train) {
      if (!train_mode.empty()) train_args.overrides.push_back("mode=" + train_mode);
      if (!train_seed.empty()) train_args.overrides.push_back("seed=" + train_seed);
      if (!train_epochs.empty()) train_args.overrides.push_back("epochs=" + train_epochs);
      if (no_renorm) train_args.overrides.push_back("renorm=false");
      ureid::cmd_train(train_args);
    }
    if (*cluster) ureid::cmd_cluster(cluster_args);
    if (*eval) ureid::cmd_eval(eval_args);
    if (*ablate) {
      ablate_args.variants = split_list(variants_csv);
      for (const auto& s : split_list(seeds_csv)) {
        ablate_args.seeds.push_back(std::strtoull(s.c_str(), nullptr, 10));
      }
      ureid::cmd_ablate(ablate_args);
    }
  } catch (const ureid::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ureid::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const ureid::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
