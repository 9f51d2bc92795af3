#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ureid/memory.hpp"
#include "oracles.hpp"

using namespace ureid;

namespace {

PseudoLabelState two_cluster_state() {
  PseudoLabelState state;
  state.assignment = {0, 0, 1, 1, -1};
  state.n_clusters = 2;
  return state;
}

HybridMemory make_memory(Rng& rng, int n_src, int n_classes, int n_tgt, int dim, double momentum_source = 0.2,
                         double momentum_target = 0.2) {
  const Mat src = oracle::random_unit_rows(rng, n_src, dim);
  std::vector<int> classes;
  for (int i = 0; i < n_src; ++i) classes.push_back(i % n_classes);
  const Mat tgt = oracle::random_unit_rows(rng, n_tgt, dim);
  return HybridMemory::init(src, classes, tgt, momentum_source, momentum_target);
}

}  // namespace

TEST_CASE("init: single-sample class keeps the sample, targets are verbatim") {
  Mat src(1, 3);
  src << 0.6, 0.8, 0.0;
  Mat tgt(3, 3);
  tgt << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  const auto mem = HybridMemory::init(src, {0}, tgt, 0.2, 0.2);
  CHECK((mem.class_centroids().row(0).transpose() - Vec(src.row(0))).norm() < 1e-12);
  CHECK((mem.instance_features() - tgt).norm() == 0.0);
  CHECK(mem.clusters().empty());
}

TEST_CASE("init: antipodal class members make a degenerate centroid") {
  Mat src(2, 2);
  src << 1, 0, -1, 0;
  CHECK_THROWS_AS(HybridMemory::init(src, {0, 0}, Mat(0, 2), 0.2, 0.2), DataError);
}

TEST_CASE("init: empty class is an error") {
  Mat src(2, 2);
  src << 1, 0, 0, 1;
  // classes {0, 2}: class 1 has no samples
  CHECK_THROWS_AS(HybridMemory::init(src, {0, 2}, Mat(0, 2), 0.2, 0.2), DataError);
}

TEST_CASE("cluster centroid equals brute-force normalized mean") {
  Rng rng(3);
  auto mem = make_memory(rng, 4, 2, 5, 6);
  auto state = two_cluster_state();
  mem.rebuild_clusters(state);

  for (const int cid : {0, 1}) {
    const auto& members = mem.clusters().at(cid);
    Vec sum = Vec::Zero(6);
    for (const int i : members) sum += mem.instance_features().row(i).transpose();
    const Vec expect = (sum / static_cast<double>(members.size())).normalized();
    CHECK((mem.cluster_centroid(cid) - expect).norm() < 1e-12);
  }
  CHECK_THROWS_AS(mem.cluster_centroid(7), ContractError);
}

TEST_CASE("identical members give the member back as centroid") {
  Mat tgt(2, 3);
  tgt << 0, 1, 0, 0, 1, 0;
  auto mem = HybridMemory::init(Mat(0, 3), {}, tgt, 0.2, 0.2);
  PseudoLabelState state;
  state.assignment = {0, 0};
  state.n_clusters = 1;
  mem.rebuild_clusters(state);
  CHECK((mem.cluster_centroid(0) - Vec(tgt.row(0))).norm() < 1e-12);
}

TEST_CASE("momentum laws: m=1 freezes, m=0 replaces") {
  Rng rng(4);
  {
    auto mem = make_memory(rng, 4, 2, 3, 5, /*momentum_source=*/1.0, /*momentum_target=*/1.0);
    const Mat w0 = mem.class_centroids();
    const Mat v0 = mem.instance_features();
    const Mat f = oracle::random_unit_rows(rng, 2, 5);
    mem.update_class_centroids(f, {0, 1});
    mem.update_instances(f, {0, 2});
    CHECK((mem.class_centroids() - w0).norm() == 0.0);
    CHECK((mem.instance_features() - v0).norm() == 0.0);
  }
  {
    auto mem = make_memory(rng, 4, 2, 3, 5, /*momentum_source=*/0.0, /*momentum_target=*/0.0);
    const Mat f = oracle::random_unit_rows(rng, 2, 5);
    mem.update_class_centroids(f.topRows(1), {1});
    mem.update_instances(f.bottomRows(1), {2});
    CHECK((mem.class_centroids().row(1) - f.row(0)).norm() == 0.0);
    CHECK((mem.instance_features().row(2) - f.row(1)).norm() == 0.0);
  }
}

TEST_CASE("update_instances: duplicate index in one batch is a contract error") {
  Rng rng(5);
  auto mem = make_memory(rng, 2, 2, 4, 5);
  const Mat f = oracle::random_unit_rows(rng, 2, 5);
  CHECK_THROWS_AS(mem.update_instances(f, {1, 1}), ContractError);
  CHECK_THROWS_AS(mem.update_instances(f, {1, 9}), ContractError);
}

TEST_CASE("update_instances reports touched clusters") {
  Rng rng(6);
  auto mem = make_memory(rng, 2, 2, 5, 4);
  mem.rebuild_clusters(two_cluster_state());
  const Mat f = oracle::random_unit_rows(rng, 2, 4);
  const auto touched = mem.update_instances(f, {0, 4});  // cluster 0 member + outlier
  CHECK(touched == std::set<int>{0});
}

TEST_CASE("two momentum steps match direct re-evaluation of the update formula") {
  Rng rng(7);
  const double m = 0.3;
  auto mem = make_memory(rng, 2, 2, 3, 6, 0.2, m);
  const Vec v0 = mem.instance_features().row(1).transpose();
  const Vec f = oracle::random_unit(rng, 6);

  Mat fm(1, 6);
  fm.row(0) = f.transpose();
  mem.update_instances(fm, {1});
  mem.update_instances(fm, {1});

  // The literal two-step composition, normalization included.
  const Vec step1 = (m * v0 + (1.0 - m) * f).normalized();
  const Vec step2 = (m * step1 + (1.0 - m) * f).normalized();
  CHECK((mem.instance_features().row(1).transpose() - step2).norm() < 1e-12);
}

TEST_CASE("all entries stay unit-norm under random update sequences") {
  Rng rng(8);
  auto mem = make_memory(rng, 6, 3, 8, 5);
  mem.rebuild_clusters(PseudoLabelState{{0, 0, 1, 1, -1, -1, 0, 1}, 2});
  for (int step = 0; step < 200; ++step) {
    const Mat f = oracle::random_unit_rows(rng, 3, 5);
    std::vector<int> classes, idx;
    for (int j = 0; j < 3; ++j) {
      classes.push_back(static_cast<int>(rng.uniform_int(3)));
    }
    idx = rng.sample_without_replacement(8, 3);
    mem.update_class_centroids(f, classes);
    mem.update_instances(f, idx);
  }
  for (Eigen::Index i = 0; i < mem.class_centroids().rows(); ++i) {
    CHECK(std::abs(mem.class_centroids().row(i).norm() - 1.0) < 1e-6);
  }
  for (Eigen::Index i = 0; i < mem.instance_features().rows(); ++i) {
    CHECK(std::abs(mem.instance_features().row(i).norm() - 1.0) < 1e-6);
  }
  // Centroids reflect the mutated v exactly (no incremental drift possible).
  const auto& members = mem.clusters().at(0);
  Vec sum = Vec::Zero(5);
  for (const int i : members) sum += mem.instance_features().row(i).transpose();
  CHECK((mem.cluster_centroid(0) - Vec(sum.normalized())).norm() < 1e-12);
}

TEST_CASE("renorm=false keeps the literal un-normalized momentum update") {
  Rng rng(10);
  const Mat src = oracle::random_unit_rows(rng, 2, 4);
  const Mat tgt = oracle::random_unit_rows(rng, 2, 4);
  auto mem = HybridMemory::init(src, {0, 1}, tgt, 0.5, 0.5, /*renormalize=*/false);
  const Vec v0 = mem.instance_features().row(0).transpose();
  const Vec f = oracle::random_unit(rng, 4);
  Mat fm(1, 4);
  fm.row(0) = f.transpose();
  mem.update_instances(fm, {0});
  const Vec expect = 0.5 * v0 + 0.5 * f;  // no normalization applied
  CHECK((mem.instance_features().row(0).transpose() - expect).norm() == 0.0);
  CHECK(mem.instance_features().row(0).norm() < 1.0);  // genuinely shorter than unit
}

TEST_CASE("rebuild_clusters replaces the map and is idempotent") {
  Rng rng(9);
  auto mem = make_memory(rng, 2, 2, 5, 4);
  PseudoLabelState all_out;
  all_out.assignment = {-1, -1, -1, -1, -1};
  all_out.n_clusters = 0;
  mem.rebuild_clusters(all_out);
  CHECK(mem.clusters().empty());

  const auto state = two_cluster_state();
  mem.rebuild_clusters(state);
  const auto once = mem.clusters();
  mem.rebuild_clusters(state);
  CHECK(mem.clusters() == once);
  CHECK(once.at(0) == std::vector<int>{0, 1});
  CHECK(once.at(1) == std::vector<int>{2, 3});

  PseudoLabelState wrong_size;
  wrong_size.assignment = {-1, -1};
  wrong_size.n_clusters = 0;
  CHECK_THROWS_AS(mem.rebuild_clusters(wrong_size), ContractError);
}
