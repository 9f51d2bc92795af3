#include "ureid/distance.hpp"

#include <algorithm>

namespace ureid {

Mat cosine_distance_matrix(const Mat& features) {
  const Eigen::Index n = features.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!is_unit_norm(Vec(features.row(i)))) {
      throw ContractError("cosine_distance_matrix: row " + std::to_string(i) + " is not unit-norm");
    }
  }
  Mat d = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dij = std::clamp(1.0 - features.row(i).dot(features.row(j)), 0.0, 2.0);
      d(i, j) = dij;
      d(j, i) = dij;
    }
  }
  return d;
}

namespace {

std::vector<std::vector<int>> knn_lists(const Mat& dist, int k) {
  const int n = static_cast<int>(dist.rows());
  std::vector<std::vector<int>> knn(static_cast<std::size_t>(n));
  std::vector<int> order(static_cast<std::size_t>(n - 1));
  for (int i = 0; i < n; ++i) {
    int m = 0;
    for (int j = 0; j < n; ++j) {
      if (j != i) order[static_cast<std::size_t>(m++)] = j;
    }
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
      if (dist(i, a) != dist(i, b)) return dist(i, a) < dist(i, b);
      return a < b;  // tie rule: smaller index wins
    });
    knn[static_cast<std::size_t>(i)].assign(order.begin(), order.begin() + k);
    std::sort(knn[static_cast<std::size_t>(i)].begin(), knn[static_cast<std::size_t>(i)].end());
  }
  return knn;
}

std::vector<std::vector<int>> reciprocal_from_knn(const std::vector<std::vector<int>>& knn) {
  const int n = static_cast<int>(knn.size());
  std::vector<std::vector<int>> recip(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& r = recip[static_cast<std::size_t>(i)];
    for (const int j : knn[static_cast<std::size_t>(i)]) {
      const auto& back = knn[static_cast<std::size_t>(j)];
      if (std::binary_search(back.begin(), back.end(), i)) r.push_back(j);
    }
    r.push_back(i);
    std::sort(r.begin(), r.end());
  }
  return recip;
}

std::vector<int> sorted_union(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

int intersection_size(const std::vector<int>& a, const std::vector<int>& b) {
  int count = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++count;
      ++ia;
      ++ib;
    }
  }
  return count;
}

}  // namespace

std::vector<std::vector<int>> k_reciprocal_sets(const Mat& dist, int k, bool expand) {
  const int n = static_cast<int>(dist.rows());
  if (k < 1 || k >= n) {
    throw ConfigError("k_reciprocal_sets: k must satisfy 1 <= k < n (k=" + std::to_string(k) +
                      ", n=" + std::to_string(n) + ")");
  }
  auto recip = reciprocal_from_knn(knn_lists(dist, k));
  if (!expand) return recip;

  const int half = (k + 1) / 2;
  const auto half_recip = reciprocal_from_knn(knn_lists(dist, half));
  std::vector<std::vector<int>> expanded = recip;
  for (int i = 0; i < n; ++i) {
    const auto& base = recip[static_cast<std::size_t>(i)];
    auto& out = expanded[static_cast<std::size_t>(i)];
    for (const int q : base) {
      const auto& candidate = half_recip[static_cast<std::size_t>(q)];
      if (3 * intersection_size(candidate, base) >= 2 * static_cast<int>(candidate.size())) {
        out = sorted_union(out, candidate);
      }
    }
  }
  return expanded;
}

Mat jaccard_distance_matrix(const std::vector<std::vector<int>>& sets) {
  const int n = static_cast<int>(sets.size());
  for (int i = 0; i < n; ++i) {
    const auto& s = sets[static_cast<std::size_t>(i)];
    if (!std::binary_search(s.begin(), s.end(), i)) {
      throw ContractError("jaccard_distance_matrix: set " + std::to_string(i) +
                          " does not contain its own point");
    }
  }
  Mat d = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const auto& si = sets[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) {
      const auto& sj = sets[static_cast<std::size_t>(j)];
      const int inter = intersection_size(si, sj);
      const int uni = static_cast<int>(si.size() + sj.size()) - inter;
      const double dij = 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
      d(i, j) = dij;
      d(j, i) = dij;
    }
  }
  return d;
}

}  // namespace ureid
