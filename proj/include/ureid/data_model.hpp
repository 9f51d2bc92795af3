#pragma once

#include "ureid/common.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ureid {

enum class Domain { Source, Target };

// One data point. `gt_label` and `cam_id` use -1 for "absent".
// Target ground-truth labels ride along for evaluation and the oracle run only;
// the training path reads target data through training_inputs(), which strips them.
struct SampleRecord {
  std::int64_t sample_id = 0;
  Domain domain = Domain::Source;
  int gt_label = -1;
  int cam_id = -1;
  Vec input;
};

// CSV format: header `sample_id,domain,gt_label,cam_id,f0,...,f{D-1}`,
// domain in {src,tgt}, floats printed at 9 significant digits, LF endings.
std::vector<SampleRecord> load_dataset(const std::string& path);
void save_dataset(const std::string& path, const std::vector<SampleRecord>& records, int d_in = -1);

// Per-target-instance assignment after clustering + filtering.
struct PseudoLabelState {
  std::vector<int> assignment;  // -1 = outlier, else cluster id in [0, n_clusters)
  int n_clusters = 0;

  int size() const { return static_cast<int>(assignment.size()); }
  int n_outliers() const;
  // Enforces: dense cluster ids, every cluster has >= 2 members, full coverage.
  void validate() const;
};

struct PseudoSplit {
  std::map<int, std::vector<int>> clusters;  // cluster id -> ascending member indices
  std::vector<int> outliers;                 // ascending instance indices
};

// Partition accessor; validates the state first.
PseudoSplit split_by_pseudo_label(const PseudoLabelState& state);

// Stacks raw input vectors as rows; labels and cam ids are deliberately not
// carried so the trainer cannot consume them.
Mat training_inputs(const std::vector<SampleRecord>& records);

// Evaluation-only access path for ground-truth labels (metrics, oracle run).
std::vector<int> evaluation_labels(const std::vector<SampleRecord>& records);

}  // namespace ureid
