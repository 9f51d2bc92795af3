#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ureid/eval.hpp"
#include "oracles.hpp"

using namespace ureid;

namespace {

RetrievalSplit to_split(const std::vector<oracle::TinyItem>& query,
                        const std::vector<oracle::TinyItem>& gallery) {
  RetrievalSplit split;
  for (const auto& q : query) split.query.push_back({q.feature, q.label, q.cam, q.uid});
  for (const auto& g : gallery) split.gallery.push_back({g.feature, g.label, g.cam, g.uid});
  return split;
}

std::vector<oracle::TinyItem> random_items(Rng& rng, int n, int dim, int n_labels, int n_cams,
                                           long long uid_base) {
  std::vector<oracle::TinyItem> items;
  for (int i = 0; i < n; ++i) {
    items.push_back({oracle::random_unit(rng, dim),
                     static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_labels))),
                     n_cams > 0 ? static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_cams))) : -1,
                     uid_base + i});
  }
  return items;
}

}  // namespace

TEST_CASE("average precision trivia") {
  CHECK(average_precision({1, 1, 1}) == 1.0);
  CHECK(average_precision({0, 0, 1}) == doctest::Approx(1.0 / 3.0));
  CHECK(average_precision({1, 0, 1, 0, 1}) ==
        doctest::Approx((1.0 + 2.0 / 3.0 + 3.0 / 5.0) / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(average_precision({0, 0, 0}), ContractError);
}

TEST_CASE("AP is invariant under monotone transforms of the similarity") {
  // Ranks depend only on the argsort, so scaling features leaves AP unchanged;
  // exercised through evaluate_retrieval with scaled query vectors.
  Rng rng(61);
  const auto gallery = random_items(rng, 12, 4, 3, 0, 100);
  auto query = random_items(rng, 5, 4, 3, 0, 200);
  const auto base = evaluate_retrieval(to_split(query, gallery));
  for (auto& q : query) q.feature *= 7.5;  // similarity scaled monotonically
  const auto scaled = evaluate_retrieval(to_split(query, gallery));
  CHECK(base.mAP == scaled.mAP);
  CHECK(base.cmc1 == scaled.cmc1);
}

TEST_CASE("hand-built two-class split matches exhaustive evaluation") {
  std::vector<oracle::TinyItem> gallery;
  Vec a(2), b(2), c(2), d(2);
  a << 1, 0;
  b << 0.8, 0.6;
  c << 0, 1;
  d << -0.6, 0.8;
  gallery.push_back({a, 0, -1, 10});
  gallery.push_back({b, 0, -1, 11});
  gallery.push_back({c, 1, -1, 12});
  gallery.push_back({d, 1, -1, 13});
  std::vector<oracle::TinyItem> query = {{a, 0, -1, 20}, {c, 1, -1, 21}};

  const auto got = evaluate_retrieval(to_split(query, gallery));
  const auto expect = oracle::exhaustive_retrieval(query, gallery);
  CHECK(got.mAP == expect.map);
  CHECK(got.cmc1 == expect.cmc1);
  CHECK(got.cmc5 == expect.cmc5);
  CHECK(got.n_valid_queries == expect.valid);
}

TEST_CASE("random tiny splits match exhaustive evaluation exactly") {
  Rng rng(62);
  for (int trial = 0; trial < 20; ++trial) {
    const int n_labels = 2 + static_cast<int>(rng.uniform_int(4));
    const int n_cams = static_cast<int>(rng.uniform_int(4));  // 0 = cam-less
    const auto gallery = random_items(rng, 8 + static_cast<int>(rng.uniform_int(12)), 5, n_labels,
                                      n_cams, 1000);
    const auto query = random_items(rng, 3 + static_cast<int>(rng.uniform_int(6)), 5, n_labels,
                                    n_cams, 2000);
    const auto got = evaluate_retrieval(to_split(query, gallery));
    const auto expect = oracle::exhaustive_retrieval(query, gallery);
    CHECK(got.mAP == expect.map);
    CHECK(got.cmc1 == expect.cmc1);
    CHECK(got.cmc5 == expect.cmc5);
    CHECK(got.cmc10 == expect.cmc10);
    CHECK(got.n_valid_queries == expect.valid);
    CHECK(got.n_skipped_queries == expect.skipped);
    CHECK(got.cmc1 <= got.cmc5);
    CHECK(got.cmc5 <= got.cmc10);
  }
}

TEST_CASE("gallery identical to query skips every self-match-only query") {
  Rng rng(63);
  std::vector<oracle::TinyItem> items;
  for (int i = 0; i < 5; ++i) {
    items.push_back({oracle::random_unit(rng, 3), i, -1, i});  // each its own class
  }
  const auto result = evaluate_retrieval(to_split(items, items));
  CHECK(result.n_valid_queries == 0);
  CHECK(result.n_skipped_queries == 5);
  CHECK(result.mAP == 0.0);
}

TEST_CASE("same-label-same-camera gallery items are excluded") {
  Vec x(2), y(2);
  x << 1, 0;
  y << 0, 1;
  std::vector<oracle::TinyItem> gallery = {{x, 0, 0, 10}, {y, 0, 1, 11}};
  std::vector<oracle::TinyItem> query = {{x, 0, 0, 20}};
  const auto res = evaluate_retrieval(to_split(query, gallery));
  // The same-cam perfect match is filtered; the cross-cam one is the hit.
  CHECK(res.n_valid_queries == 1);
  CHECK(res.mAP == 1.0);
}

TEST_CASE("empty split is an error") {
  RetrievalSplit split;
  CHECK_THROWS_AS(evaluate_retrieval(split), DataError);
}

TEST_CASE("nmi basics and degenerate conventions") {
  CHECK(nmi({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
  CHECK(nmi({0, 0, 0, 0}, {0, 0, 1, 1}) == 0.0);  // H(U)=0, partitions differ
  CHECK(nmi({0, 0, 0}, {5, 5, 5}) == 1.0);        // both trivial and identical
  CHECK(nmi({0, 1, 0, 1}, {0, 1, 1, 0}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("nmi is symmetric and matches the contingency oracle") {
  Rng rng(64);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 6 + static_cast<int>(rng.uniform_int(20));
    std::vector<int> a, b;
    for (int i = 0; i < n; ++i) {
      a.push_back(static_cast<int>(rng.uniform_int(4)));
      b.push_back(static_cast<int>(rng.uniform_int(3)));
    }
    const double ab = nmi(a, b);
    CHECK(ab == doctest::Approx(oracle::contingency_nmi(a, b)).epsilon(1e-12));
    CHECK(ab == doctest::Approx(nmi(b, a)).epsilon(1e-12));
    CHECK(ab >= -1e-12);
    CHECK(ab <= 1.0 + 1e-12);
  }
}

TEST_CASE("six-point two-cluster case with one swap matches the oracle") {
  const std::vector<int> pseudo = {0, 0, 0, 1, 1, 1};
  const std::vector<int> gt = {0, 0, 1, 0, 1, 1};
  CHECK(nmi(pseudo, gt) == doctest::Approx(oracle::contingency_nmi(pseudo, gt)).epsilon(1e-12));
}

TEST_CASE("pseudo-label NMI variants") {
  PseudoLabelState state;
  state.assignment = {0, 0, 1, 1, -1, -1};
  state.n_clusters = 2;
  const std::vector<int> gt = {7, 7, 8, 8, 9, 9};
  const auto scores = pseudo_label_nmi(state, gt);
  CHECK(scores.clustered_only == doctest::Approx(1.0));
  // All-points variant treats each outlier as its own singleton cluster.
  const std::vector<int> pseudo_all = {0, 0, 1, 1, 2, 3};
  CHECK(scores.all_points == doctest::Approx(oracle::contingency_nmi(pseudo_all, gt)).epsilon(1e-12));

  PseudoLabelState none;
  none.assignment = {-1, -1, -1};
  none.n_clusters = 0;
  const auto empty_scores = pseudo_label_nmi(none, {1, 2, 3});
  CHECK(std::isnan(empty_scores.clustered_only));
  CHECK(empty_scores.all_points == doctest::Approx(1.0));  // singletons match distinct gt exactly
}

TEST_CASE("retrieval split is per-identity, seeded, and covers everything") {
  Rng rng(65);
  const int n = 40;
  const Mat feats = oracle::random_unit_rows(rng, n, 4);
  std::vector<int> labels, cams;
  for (int i = 0; i < n; ++i) {
    labels.push_back(i % 5);
    cams.push_back(i % 3);
  }
  const auto split = make_retrieval_split(feats, labels, cams, 0.25, 99);
  CHECK(split.query.size() + split.gallery.size() == static_cast<std::size_t>(n));
  // 8 samples per identity -> 2 queries each.
  CHECK(split.query.size() == 10);
  const auto again = make_retrieval_split(feats, labels, cams, 0.25, 99);
  CHECK(again.query.size() == split.query.size());
  for (std::size_t i = 0; i < split.query.size(); ++i) {
    CHECK(again.query[i].uid == split.query[i].uid);
  }
}

TEST_CASE("perfect features on separable identities give mAP 1") {
  // Features identical within identity and orthogonal across: retrieval is perfect.
  Mat feats(6, 3);
  feats << 1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1;
  const std::vector<int> labels = {0, 0, 1, 1, 2, 2};
  const std::vector<int> cams = {0, 1, 0, 1, 0, 1};
  const auto split = make_retrieval_split(feats, labels, cams, 0.25, 3);
  const auto res = evaluate_retrieval(split);
  CHECK(res.mAP == doctest::Approx(1.0));
  CHECK(res.cmc1 == doctest::Approx(1.0));
}
