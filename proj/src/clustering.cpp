#include "ureid/clustering.hpp"

#include <queue>

namespace ureid {

void DbscanParams::validate() const {
  if (!(eps > 0.0)) throw ConfigError("dbscan: eps must be > 0");
  if (min_pts < 2) throw ConfigError("dbscan: min_pts must be >= 2");
  if (delta < 0.0) throw ConfigError("dbscan: delta must be >= 0");
  if (!(eps - delta > 0.0)) throw ConfigError("dbscan: eps - delta must stay > 0");
}

std::vector<std::vector<int>> ClusterPartition::cluster_members() const {
  std::vector<std::vector<int>> members(static_cast<std::size_t>(n_clusters));
  for (int i = 0; i < size(); ++i) {
    const int c = label[static_cast<std::size_t>(i)];
    if (c >= 0) members[static_cast<std::size_t>(c)].push_back(i);
  }
  return members;
}

ClusterPartition dbscan(const Mat& dist, double eps, int min_pts) {
  const int n = static_cast<int>(dist.rows());
  if (dist.cols() != n) throw ContractError("dbscan: distance matrix must be square");
  if (min_pts < 2) throw ConfigError("dbscan: min_pts must be >= 2");

  std::vector<std::vector<int>> neighbors(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j != i && dist(i, j) <= eps) neighbors[static_cast<std::size_t>(i)].push_back(j);
    }
  }
  std::vector<char> core(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    core[static_cast<std::size_t>(i)] =
        static_cast<int>(neighbors[static_cast<std::size_t>(i)].size()) >= min_pts;
  }

  ClusterPartition part;
  part.label.assign(static_cast<std::size_t>(n), -1);

  // Components of the core-core graph, scanned in index order so ids come out
  // sorted by each component's smallest core index.
  int next_id = 0;
  for (int i = 0; i < n; ++i) {
    if (!core[static_cast<std::size_t>(i)] || part.label[static_cast<std::size_t>(i)] >= 0) continue;
    const int cid = next_id++;
    std::queue<int> frontier;
    frontier.push(i);
    part.label[static_cast<std::size_t>(i)] = cid;
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (const int w : neighbors[static_cast<std::size_t>(u)]) {
        if (core[static_cast<std::size_t>(w)] && part.label[static_cast<std::size_t>(w)] < 0) {
          part.label[static_cast<std::size_t>(w)] = cid;
          frontier.push(w);
        }
      }
    }
  }
  part.n_clusters = next_id;

  // Border points: lowest-index core within eps decides the cluster.
  for (int i = 0; i < n; ++i) {
    if (core[static_cast<std::size_t>(i)]) continue;
    for (const int j : neighbors[static_cast<std::size_t>(i)]) {
      if (core[static_cast<std::size_t>(j)]) {
        part.label[static_cast<std::size_t>(i)] = part.label[static_cast<std::size_t>(j)];
        break;  // neighbor lists are ascending, first core hit is the lowest index
      }
    }
  }
  return part;
}

ThreeScalePartitions cluster_at_three_scales(const Mat& dist, const DbscanParams& params) {
  params.validate();
  ThreeScalePartitions out;
  out.main = dbscan(dist, params.eps, params.min_pts);
  out.loose = dbscan(dist, params.eps + params.delta, params.min_pts);
  out.tight = dbscan(dist, params.eps - params.delta, params.min_pts);
  return out;
}

}  // namespace ureid
