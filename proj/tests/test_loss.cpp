#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ureid/loss.hpp"
#include "oracles.hpp"

using namespace ureid;

namespace {

std::vector<Vec> bank_rows(const PrototypeBank& bank) {
  std::vector<Vec> rows;
  for (int i = 0; i < bank.size(); ++i) rows.emplace_back(bank.prototypes().row(i).transpose());
  return rows;
}

PrototypeBank random_bank(Rng& rng, int n_s, int n_c, int n_o, int dim, double tau) {
  return PrototypeBank(oracle::random_unit_rows(rng, n_s, dim),
                       oracle::random_unit_rows(rng, n_c, dim),
                       oracle::random_unit_rows(rng, n_o, dim), tau);
}

}  // namespace

TEST_CASE("single-prototype bank has zero loss and zero gradient") {
  Mat z(1, 4);
  z << 1, 0, 0, 0;
  const PrototypeBank bank(z, Mat(0, 4), Mat(0, 4), 0.05);
  Vec f(4);
  f << 0, 1, 0, 0;
  const PositiveRef pos{Segment::SourceClass, 0};
  CHECK(unified_loss(f, bank, pos) == 0.0);
  CHECK(unified_loss_grad(f, bank, pos).norm() == 0.0);
}

TEST_CASE("temperature must be positive") {
  CHECK_THROWS_AS(PrototypeBank(Mat(1, 2), Mat(0, 2), Mat(0, 2), 0.0), ConfigError);
  CHECK_THROWS_AS(PrototypeBank(Mat(1, 2), Mat(0, 2), Mat(0, 2), -0.1), ConfigError);
}

TEST_CASE("hand-evaluated softmax in D=2 at tau=0.5") {
  Mat protos(3, 2);
  protos << 1, 0, 0, 1, -1, 0;
  const PrototypeBank bank(protos, Mat(0, 2), Mat(0, 2), 0.5);
  Vec f(2);
  f << std::sqrt(0.5), std::sqrt(0.5);
  const PositiveRef pos{Segment::SourceClass, 1};

  const double loss = unified_loss(f, bank, pos);
  const double by_hand = oracle::softmax_loss(f, bank_rows(bank), 1, 0.5);
  CHECK(loss == doctest::Approx(by_hand).epsilon(1e-12));
}

TEST_CASE("symmetric two-prototype gradient") {
  Mat protos(2, 2);
  protos << 1, 0, 0, 1;
  const double tau = 0.2;
  const PrototypeBank bank(protos, Mat(0, 2), Mat(0, 2), tau);
  Vec f(2);
  f << std::sqrt(0.5), std::sqrt(0.5);  // equidistant: p = 1/2 each
  const Vec grad = unified_loss_grad(f, bank, {Segment::SourceClass, 0});
  const Vec expect = (0.5 * Vec(protos.row(0)) + 0.5 * Vec(protos.row(1)) - Vec(protos.row(0))) / tau;
  CHECK((grad - expect).norm() < 1e-12);
}

TEST_CASE("gradient matches central finite differences on random instances") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = 6;
    auto bank = random_bank(rng, 3, 2, 2, dim, 0.05 + 0.5 * rng.uniform());
    Vec f = oracle::random_unit(rng, dim);
    const PositiveRef pos{Segment::TargetCluster, static_cast<int>(rng.uniform_int(2))};

    const Vec grad = unified_loss_grad(f, bank, pos);
    for (int j = 0; j < dim; ++j) {
      const double numeric = oracle::central_difference(
          [&]() { return unified_loss(f, bank, pos); }, f[j], 1e-6);
      CHECK(oracle::grad_close(grad[j], numeric, 1e-6, 1e-9));
    }
  }
}

TEST_CASE("loss equals the naive brute-force softmax") {
  Rng rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = 2 + static_cast<int>(rng.uniform_int(15));
    const int n_s = 1 + static_cast<int>(rng.uniform_int(5));
    const int n_c = static_cast<int>(rng.uniform_int(5));
    const int n_o = static_cast<int>(rng.uniform_int(5));
    const auto bank = random_bank(rng, n_s, n_c, n_o, dim, 0.05);
    const Vec f = oracle::random_unit(rng, dim);
    const int flat = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(bank.size())));
    PositiveRef pos;
    if (flat < n_s) {
      pos = {Segment::SourceClass, flat};
    } else if (flat < n_s + n_c) {
      pos = {Segment::TargetCluster, flat - n_s};
    } else {
      pos = {Segment::TargetOutlier, flat - n_s - n_c};
    }
    const double naive = oracle::softmax_loss(f, bank_rows(bank), flat, 0.05);
    CHECK(unified_loss(f, bank, pos) == doctest::Approx(naive).epsilon(1e-12));
  }
}

TEST_CASE("unsupervised bank drops the source segment only") {
  Rng rng(23);
  const auto bank = random_bank(rng, 3, 2, 1, 4, 0.05);
  const auto reduced = unsupervised_bank(bank);
  CHECK(reduced.n_source() == 0);
  CHECK(reduced.n_cluster() == 2);
  CHECK(reduced.n_outlier() == 1);
  CHECK((reduced.prototypes() - bank.prototypes().bottomRows(3)).norm() == 0.0);

  const auto twice = unsupervised_bank(reduced);
  CHECK((twice.prototypes() - reduced.prototypes()).norm() == 0.0);

  // Loss over the reduced bank equals the naive softmax over the reduced set.
  const Vec f = oracle::random_unit(rng, 4);
  const PositiveRef pos{Segment::TargetCluster, 1};
  const double naive = oracle::softmax_loss(f, bank_rows(reduced), 1, 0.05);
  CHECK(unified_loss(f, reduced, pos) == doctest::Approx(naive).epsilon(1e-12));

  // A source positive has nowhere to point in the reduced bank.
  CHECK_THROWS_AS(unified_loss(f, reduced, PositiveRef{Segment::SourceClass, 0}), ContractError);
}

TEST_CASE("batch loss: singleton batch, mean invariance, mixed-batch oracle") {
  Rng rng(24);
  const int dim = 5;
  const auto bank = random_bank(rng, 2, 2, 1, dim, 0.05);

  const Vec f = oracle::random_unit(rng, dim);
  Mat one(1, dim);
  one.row(0) = f.transpose();
  const PositiveRef pos{Segment::SourceClass, 1};
  const auto single = batch_loss(one, bank, {pos}, {Segment::SourceClass});
  CHECK(single.mean_loss == doctest::Approx(unified_loss(f, bank, pos)).epsilon(1e-12));

  Mat two(2, dim);
  two.row(0) = f.transpose();
  two.row(1) = f.transpose();
  const auto dup = batch_loss(two, bank, {pos, pos}, {Segment::SourceClass, Segment::SourceClass});
  CHECK(dup.mean_loss == doctest::Approx(single.mean_loss).epsilon(1e-12));

  // Mixed batch of 4 against the hand-summed mean.
  Mat batch = oracle::random_unit_rows(rng, 4, dim);
  const std::vector<PositiveRef> positives = {{Segment::SourceClass, 0},
                                              {Segment::TargetCluster, 0},
                                              {Segment::TargetCluster, 1},
                                              {Segment::TargetOutlier, 0}};
  const std::vector<Segment> roles = {Segment::SourceClass, Segment::TargetCluster,
                                      Segment::TargetCluster, Segment::TargetOutlier};
  const auto res = batch_loss(batch, bank, positives, roles);
  double hand = 0.0;
  for (int i = 0; i < 4; ++i) {
    hand += oracle::softmax_loss(Vec(batch.row(i)), bank_rows(bank),
                                 bank.flat_index(positives[static_cast<std::size_t>(i)]), 0.05);
  }
  CHECK(res.mean_loss == doctest::Approx(hand / 4.0).epsilon(1e-12));
}

TEST_CASE("positive/segment mismatch is a contract error") {
  Rng rng(25);
  const auto bank = random_bank(rng, 2, 2, 1, 4, 0.05);
  Mat batch = oracle::random_unit_rows(rng, 1, 4);
  CHECK_THROWS_AS(
      batch_loss(batch, bank, {{Segment::SourceClass, 0}}, {Segment::TargetCluster}),
      ContractError);
}

TEST_CASE("loss is nonnegative and zero only for a pure-positive bank") {
  Rng rng(26);
  for (int trial = 0; trial < 100; ++trial) {
    const auto bank = random_bank(rng, 2, 2, 2, 4, 0.05);
    const Vec f = oracle::random_unit(rng, 4);
    CHECK(unified_loss(f, bank, {Segment::TargetOutlier, 1}) >= 0.0);
  }
}

TEST_CASE("restricted denominator never exceeds the full one") {
  Rng rng(27);
  for (int trial = 0; trial < 100; ++trial) {
    const auto bank = random_bank(rng, 3, 3, 2, 5, 0.05);
    const Vec f = oracle::random_unit(rng, 5);
    const PositiveRef pos{Segment::TargetCluster, static_cast<int>(rng.uniform_int(3))};
    const double full = unified_loss(f, bank, pos, false);
    const double own = unified_loss(f, bank, pos, true);
    CHECK(full >= own - 1e-12);  // more negatives can only increase the loss
  }
}

TEST_CASE("shift invariance: stabilized result matches extended-precision naive sum") {
  Rng rng(28);
  for (int trial = 0; trial < 50; ++trial) {
    const auto bank = random_bank(rng, 4, 0, 0, 3, 0.02);  // logits up to 50
    const Vec f = oracle::random_unit(rng, 3);
    const double naive = oracle::softmax_loss(f, bank_rows(bank), 2, 0.02);
    CHECK(unified_loss(f, bank, {Segment::SourceClass, 2}) ==
          doctest::Approx(naive).epsilon(1e-12));
  }
}

TEST_CASE("empty bank and non-unit prototypes are rejected") {
  CHECK_THROWS_AS(PrototypeBank(2.0 * Mat::Identity(2, 2), Mat(0, 2), Mat(0, 2), 0.05),
                  ContractError);
  const PrototypeBank empty(Mat(0, 2), Mat(0, 2), Mat(0, 2), 0.05);
  Vec f(2);
  f << 1, 0;
  CHECK_THROWS_AS(unified_loss(f, empty, {Segment::SourceClass, 0}), ContractError);
}
