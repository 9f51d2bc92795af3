#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ureid/synth.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ureid;

namespace {

SynthConfig small_cfg() {
  SynthConfig cfg;
  cfg.seed = 1;
  cfg.dim = 8;
  cfg.n_source_ids = 5;
  cfg.n_target_ids = 5;
  cfg.shared_ids = 0;
  cfg.samples_per_id = 4;
  cfg.intra_class_std = 0.05;
  cfg.domain_shift = 0.2;
  cfg.n_cameras = 3;
  return cfg;
}

std::string dataset_bytes(const std::vector<SampleRecord>& records, int dim) {
  const auto dir = std::filesystem::temp_directory_path() / "ureid_synth_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / "tmp.csv";
  save_dataset(path.string(), records, dim);
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("counts match the config") {
  const auto out = generate(small_cfg());
  CHECK(out.source.size() == 20);
  CHECK(out.target.size() == 20);
  for (const auto& rec : out.source) {
    CHECK(rec.gt_label >= 0);
    CHECK(rec.gt_label < 5);
    CHECK(rec.cam_id >= 0);
    CHECK(rec.cam_id < 3);
    CHECK(rec.input.size() == 8);
    CHECK(rec.input.norm() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("zero shift keeps shared centers identical before noise") {
  auto cfg = small_cfg();
  cfg.shared_ids = 5;
  cfg.domain_shift = 0.0;
  cfg.intra_class_std = 1e-12;  // samples collapse onto the centers
  const auto out = generate(cfg);
  for (int id = 0; id < 5; ++id) {
    const Vec src = out.source[static_cast<std::size_t>(id * 4)].input;
    const Vec tgt = out.target[static_cast<std::size_t>(id * 4)].input;
    CHECK((src - tgt).norm() < 1e-9);
  }
}

TEST_CASE("same seed gives identical bytes, different seed differs") {
  const auto cfg = small_cfg();
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  CHECK(dataset_bytes(a.source, cfg.dim) == dataset_bytes(b.source, cfg.dim));
  CHECK(dataset_bytes(a.target, cfg.dim) == dataset_bytes(b.target, cfg.dim));

  auto cfg2 = cfg;
  cfg2.seed = 2;
  const auto c = generate(cfg2);
  CHECK(dataset_bytes(a.source, cfg.dim) != dataset_bytes(c.source, cfg.dim));
}

TEST_CASE("config validation") {
  auto cfg = small_cfg();
  cfg.shared_ids = 6;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
  cfg = small_cfg();
  cfg.samples_per_id = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("near-zero noise makes nearest-centroid classification perfect") {
  auto cfg = small_cfg();
  cfg.intra_class_std = 1e-9;
  cfg.n_source_ids = 8;
  const auto out = generate(cfg);

  // Brute-force nearest-centroid classifier as the data sanity oracle.
  std::vector<Vec> centroids(8, Vec::Zero(cfg.dim));
  std::vector<int> counts(8, 0);
  for (const auto& rec : out.source) {
    centroids[static_cast<std::size_t>(rec.gt_label)] += rec.input;
    ++counts[static_cast<std::size_t>(rec.gt_label)];
  }
  for (int id = 0; id < 8; ++id) centroids[static_cast<std::size_t>(id)] /= counts[static_cast<std::size_t>(id)];

  int correct = 0;
  for (const auto& rec : out.source) {
    int best = -1;
    double best_d = 1e18;
    for (int id = 0; id < 8; ++id) {
      const double d = (rec.input - centroids[static_cast<std::size_t>(id)]).norm();
      if (d < best_d) {
        best_d = d;
        best = id;
      }
    }
    correct += best == rec.gt_label;
  }
  CHECK(correct == static_cast<int>(out.source.size()));

  // Within-identity distances collapse with the noise.
  for (int id = 0; id < 8; ++id) {
    for (int s = 1; s < cfg.samples_per_id; ++s) {
      const auto base = static_cast<std::size_t>(id * cfg.samples_per_id);
      CHECK((out.source[base].input - out.source[base + static_cast<std::size_t>(s)].input).norm() <
            1e-6);
    }
  }
}

TEST_CASE("from_config rejects unknown keys") {
  const auto kv = KeyValueConfig::parse_string("dim = 16\nseeed = 3\n");
  CHECK_THROWS_AS(SynthConfig::from_config(kv), ConfigError);
}
