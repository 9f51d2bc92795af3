#include "ureid/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace ureid {

double average_precision(const std::vector<int>& ranked_relevance) {
  int n_relevant = 0;
  double sum = 0.0;
  int hits = 0;
  for (std::size_t r = 0; r < ranked_relevance.size(); ++r) {
    if (ranked_relevance[r]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
      ++n_relevant;
    }
  }
  if (n_relevant == 0) throw ContractError("average_precision: no relevant items in ranking");
  return sum / static_cast<double>(n_relevant);
}

EvalResult evaluate_retrieval(const RetrievalSplit& split) {
  if (split.query.empty() || split.gallery.empty()) {
    throw DataError("evaluate_retrieval: empty query or gallery");
  }
  EvalResult result;
  double map_sum = 0.0;
  int top1 = 0, top5 = 0, top10 = 0;

  std::vector<int> order;
  for (const auto& q : split.query) {
    order.clear();
    for (int g = 0; g < static_cast<int>(split.gallery.size()); ++g) {
      const auto& item = split.gallery[static_cast<std::size_t>(g)];
      if (item.uid == q.uid) continue;  // identical sample
      if (q.cam >= 0 && item.cam >= 0 && item.label == q.label && item.cam == q.cam) continue;
      order.push_back(g);
    }
    bool any_relevant = false;
    for (const int g : order) {
      if (split.gallery[static_cast<std::size_t>(g)].label == q.label) {
        any_relevant = true;
        break;
      }
    }
    if (!any_relevant) {
      ++result.n_skipped_queries;
      continue;
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      const double sa = q.feature.dot(split.gallery[static_cast<std::size_t>(a)].feature);
      const double sb = q.feature.dot(split.gallery[static_cast<std::size_t>(b)].feature);
      if (sa != sb) return sa > sb;
      return a < b;  // tie rule: gallery index
    });
    std::vector<int> flags(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
      flags[r] = split.gallery[static_cast<std::size_t>(order[r])].label == q.label;
    }
    map_sum += average_precision(flags);
    const auto hit_within = [&](std::size_t k) {
      const std::size_t limit = std::min(k, flags.size());
      for (std::size_t r = 0; r < limit; ++r) {
        if (flags[r]) return true;
      }
      return false;
    };
    top1 += hit_within(1);
    top5 += hit_within(5);
    top10 += hit_within(10);
    ++result.n_valid_queries;
  }

  if (result.n_valid_queries > 0) {
    const double n = result.n_valid_queries;
    result.mAP = map_sum / n;
    result.cmc1 = top1 / n;
    result.cmc5 = top5 / n;
    result.cmc10 = top10 / n;
  }
  return result;
}

namespace {

double entropy(const std::map<int, int>& counts, int n) {
  double h = 0.0;
  for (const auto& [label, c] : counts) {
    (void)label;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

// Same partition structure: every a-block maps to exactly one b-block and back.
bool partitions_identical(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<int, int> fwd, bwd;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto f = fwd.emplace(a[i], b[i]);
    if (!f.second && f.first->second != b[i]) return false;
    const auto g = bwd.emplace(b[i], a[i]);
    if (!g.second && g.first->second != a[i]) return false;
  }
  return true;
}

}  // namespace

double nmi(const std::vector<int>& labels_a, const std::vector<int>& labels_b) {
  if (labels_a.size() != labels_b.size() || labels_a.empty()) {
    throw ContractError("nmi: label vectors must be nonempty and of equal length");
  }
  const int n = static_cast<int>(labels_a.size());
  std::map<int, int> ca, cb;
  std::map<std::pair<int, int>, int> joint;
  for (int i = 0; i < n; ++i) {
    ++ca[labels_a[static_cast<std::size_t>(i)]];
    ++cb[labels_b[static_cast<std::size_t>(i)]];
    ++joint[{labels_a[static_cast<std::size_t>(i)], labels_b[static_cast<std::size_t>(i)]}];
  }
  const double ha = entropy(ca, n);
  const double hb = entropy(cb, n);
  if (ha == 0.0 || hb == 0.0) {
    return partitions_identical(labels_a, labels_b) ? 1.0 : 0.0;
  }
  double mi = 0.0;
  for (const auto& [ab, c] : joint) {
    const double p = static_cast<double>(c) / n;
    const double pa = static_cast<double>(ca[ab.first]) / n;
    const double pb = static_cast<double>(cb[ab.second]) / n;
    mi += p * std::log(p / (pa * pb));
  }
  return mi / std::sqrt(ha * hb);
}

NmiPair pseudo_label_nmi(const PseudoLabelState& state, const std::vector<int>& gt_labels) {
  if (static_cast<int>(gt_labels.size()) != state.size()) {
    throw ContractError("pseudo_label_nmi: label count does not match state");
  }
  NmiPair out;

  std::vector<int> pseudo_clustered, gt_clustered;
  for (int i = 0; i < state.size(); ++i) {
    if (state.assignment[static_cast<std::size_t>(i)] >= 0) {
      pseudo_clustered.push_back(state.assignment[static_cast<std::size_t>(i)]);
      gt_clustered.push_back(gt_labels[static_cast<std::size_t>(i)]);
    }
  }
  out.clustered_only = pseudo_clustered.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                : nmi(pseudo_clustered, gt_clustered);

  std::vector<int> pseudo_all(gt_labels.size());
  int next_singleton = state.n_clusters;
  for (int i = 0; i < state.size(); ++i) {
    const int a = state.assignment[static_cast<std::size_t>(i)];
    pseudo_all[static_cast<std::size_t>(i)] = a >= 0 ? a : next_singleton++;
  }
  out.all_points = nmi(pseudo_all, gt_labels);
  return out;
}

RetrievalSplit make_retrieval_split(const Mat& features, const std::vector<int>& labels,
                                    const std::vector<int>& cams, double query_fraction,
                                    std::uint64_t seed) {
  const int n = static_cast<int>(features.rows());
  if (static_cast<int>(labels.size()) != n || static_cast<int>(cams.size()) != n) {
    throw ContractError("make_retrieval_split: labels/cams do not match feature count");
  }
  if (!(query_fraction > 0.0) || query_fraction >= 1.0) {
    throw ConfigError("query_fraction must be in (0,1)");
  }

  std::map<int, std::vector<int>> by_label;
  for (int i = 0; i < n; ++i) by_label[labels[static_cast<std::size_t>(i)]].push_back(i);

  Rng rng(seed);
  RetrievalSplit split;
  const auto item_at = [&](int i) {
    return RetrievalItem{Vec(features.row(i)), labels[static_cast<std::size_t>(i)],
                         cams[static_cast<std::size_t>(i)], i};
  };
  for (auto& [label, members] : by_label) {
    (void)label;
    if (members.size() < 2) {
      // An identity with one sample could never be matched; keep it as a distractor.
      split.gallery.push_back(item_at(members.front()));
      continue;
    }
    rng.shuffle(members);
    auto n_query = static_cast<std::size_t>(query_fraction * static_cast<double>(members.size()));
    n_query = std::clamp<std::size_t>(n_query, 1, members.size() - 1);
    for (std::size_t i = 0; i < members.size(); ++i) {
      (i < n_query ? split.query : split.gallery).push_back(item_at(members[i]));
    }
  }
  return split;
}

}  // namespace ureid
