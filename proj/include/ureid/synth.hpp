#pragma once

#include "ureid/config.hpp"
#include "ureid/data_model.hpp"

#include <cstdint>

namespace ureid {

// Two-domain synthetic identity data: identity centers drawn uniformly on the
// unit sphere, samples are sphere-projected Gaussian clouds around them. The
// target domain reuses `shared_ids` source centers pushed through a fixed
// random rotation + translation of magnitude `domain_shift`, plus fresh centers.
struct SynthConfig {
  std::uint64_t seed = 7;
  int dim = 32;
  int n_source_ids = 30;
  int n_target_ids = 30;
  int shared_ids = 10;
  int samples_per_id = 20;
  double intra_class_std = 0.22;
  double domain_shift = 0.3;
  int n_cameras = 4;

  void validate() const;
  static SynthConfig bench_small() { return SynthConfig{}; }
  static SynthConfig from_config(const KeyValueConfig& kv);
};

struct SynthOutput {
  std::vector<SampleRecord> source;
  std::vector<SampleRecord> target;
};

// Deterministic: same config, same bytes.
SynthOutput generate(const SynthConfig& cfg);

}  // namespace ureid
