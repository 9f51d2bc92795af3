#pragma once

#include "ureid/common.hpp"
#include "ureid/data_model.hpp"
#include "ureid/rng.hpp"

#include <cstdint>
#include <vector>

namespace ureid {

struct RetrievalItem {
  Vec feature;
  int label = -1;
  int cam = -1;              // -1 disables the same-label-same-camera exclusion
  std::int64_t uid = -1;     // identical uid in query and gallery marks the same sample
};

struct RetrievalSplit {
  std::vector<RetrievalItem> query;
  std::vector<RetrievalItem> gallery;
};

struct EvalResult {
  double mAP = 0.0;
  double cmc1 = 0.0, cmc5 = 0.0, cmc10 = 0.0;
  int n_valid_queries = 0;
  int n_skipped_queries = 0;  // queries with no relevant gallery item left
};

// AP over a ranked list of 0/1 relevance flags: mean over relevant ranks r of
// (relevant in top-r)/r. Throws on an all-zero list (callers skip those queries).
double average_precision(const std::vector<int>& ranked_relevance);

// Raw cosine ranking, ties broken by gallery index; no re-ranking. Gallery
// items with the query's uid are excluded, as are same-label-same-camera items
// when the query carries a camera id.
EvalResult evaluate_retrieval(const RetrievalSplit& split);

// NMI with sqrt normalization and natural-log entropies. If either partition
// has zero entropy: 1 when the partitions are identical, else 0.
double nmi(const std::vector<int>& labels_a, const std::vector<int>& labels_b);

struct NmiPair {
  double clustered_only = 0.0;  // restricted to clustered points (NaN when none)
  double all_points = 0.0;      // outliers count as singleton clusters
};

NmiPair pseudo_label_nmi(const PseudoLabelState& state, const std::vector<int>& gt_labels);

// Per-identity query/gallery split (roughly query_fraction of each identity,
// at least one query and one gallery item when the identity has >= 2 samples).
RetrievalSplit make_retrieval_split(const Mat& features, const std::vector<int>& labels,
                                    const std::vector<int>& cams, double query_fraction,
                                    std::uint64_t seed);

}  // namespace ureid
