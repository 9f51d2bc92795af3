#include "ureid/synth.hpp"

#include "ureid/rng.hpp"

namespace ureid {

void SynthConfig::validate() const {
  if (dim < 2) throw ConfigError("synth: dim must be >= 2");
  if (n_source_ids < 1 || n_target_ids < 1) throw ConfigError("synth: id counts must be >= 1");
  if (shared_ids < 0 || shared_ids > std::min(n_source_ids, n_target_ids)) {
    throw ConfigError("synth: shared_ids must be in [0, min(n_source_ids, n_target_ids)]");
  }
  if (samples_per_id < 2) throw ConfigError("synth: samples_per_id must be >= 2");
  if (!(intra_class_std > 0.0)) throw ConfigError("synth: intra_class_std must be > 0");
  if (domain_shift < 0.0) throw ConfigError("synth: domain_shift must be >= 0");
  if (n_cameras < 1) throw ConfigError("synth: n_cameras must be >= 1");
}

SynthConfig SynthConfig::from_config(const KeyValueConfig& kv) {
  kv.check_known({"seed", "dim", "n_source_ids", "n_target_ids", "shared_ids", "samples_per_id",
                  "intra_class_std", "domain_shift", "n_cameras"});
  SynthConfig cfg;
  cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(cfg.seed)));
  cfg.dim = static_cast<int>(kv.get_int("dim", cfg.dim));
  cfg.n_source_ids = static_cast<int>(kv.get_int("n_source_ids", cfg.n_source_ids));
  cfg.n_target_ids = static_cast<int>(kv.get_int("n_target_ids", cfg.n_target_ids));
  cfg.shared_ids = static_cast<int>(kv.get_int("shared_ids", cfg.shared_ids));
  cfg.samples_per_id = static_cast<int>(kv.get_int("samples_per_id", cfg.samples_per_id));
  cfg.intra_class_std = kv.get_double("intra_class_std", cfg.intra_class_std);
  cfg.domain_shift = kv.get_double("domain_shift", cfg.domain_shift);
  cfg.n_cameras = static_cast<int>(kv.get_int("n_cameras", cfg.n_cameras));
  cfg.validate();
  return cfg;
}

namespace {

Vec gaussian_vec(Rng& rng, int dim) {
  Vec v(dim);
  for (int j = 0; j < dim; ++j) v[j] = rng.normal();
  return v;
}

Vec unit_sphere_point(Rng& rng, int dim) {
  for (;;) {
    const Vec v = gaussian_vec(rng, dim);
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

// Rotation by `angle` in the plane spanned by orthonormal u1,u2 plus translation t,
// re-projected to the sphere.
struct ShiftMap {
  Vec u1, u2, t;
  double angle = 0.0;

  Vec apply(const Vec& x) const {
    if (angle == 0.0 && t.isZero(0.0)) return x;  // exact identity at shift 0
    const double a = u1.dot(x);
    const double b = u2.dot(x);
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Vec y = x + (c - 1.0) * (a * u1 + b * u2) + s * (a * u2 - b * u1) + t;
    return l2_normalized(y);
  }
};

ShiftMap make_shift_map(Rng& rng, int dim, double magnitude) {
  ShiftMap map;
  map.u1 = unit_sphere_point(rng, dim);
  Vec v = gaussian_vec(rng, dim);
  v -= map.u1 * map.u1.dot(v);
  const double n = v.norm();
  map.u2 = n > 1e-12 ? Vec(v / n) : Vec(-map.u1);
  map.angle = magnitude;
  map.t = magnitude == 0.0 ? Vec(Vec::Zero(dim)) : Vec(magnitude * unit_sphere_point(rng, dim));
  return map;
}

}  // namespace

SynthOutput generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  std::vector<Vec> src_centers;
  src_centers.reserve(static_cast<std::size_t>(cfg.n_source_ids));
  for (int id = 0; id < cfg.n_source_ids; ++id) src_centers.push_back(unit_sphere_point(rng, cfg.dim));

  const ShiftMap shift = make_shift_map(rng, cfg.dim, cfg.domain_shift);

  std::vector<Vec> tgt_centers;
  tgt_centers.reserve(static_cast<std::size_t>(cfg.n_target_ids));
  for (int id = 0; id < cfg.n_target_ids; ++id) {
    if (id < cfg.shared_ids) {
      tgt_centers.push_back(shift.apply(src_centers[static_cast<std::size_t>(id)]));
    } else {
      tgt_centers.push_back(unit_sphere_point(rng, cfg.dim));
    }
  }

  SynthOutput out;
  const auto emit = [&](Domain domain, const std::vector<Vec>& centers, std::vector<SampleRecord>& dst) {
    std::int64_t next_id = 0;
    for (std::size_t id = 0; id < centers.size(); ++id) {
      for (int s = 0; s < cfg.samples_per_id; ++s) {
        SampleRecord rec;
        rec.sample_id = next_id++;
        rec.domain = domain;
        rec.gt_label = static_cast<int>(id);
        rec.cam_id = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.n_cameras)));
        Vec x = centers[id] + cfg.intra_class_std * gaussian_vec(rng, cfg.dim);
        rec.input = l2_normalized(x);
        dst.push_back(std::move(rec));
      }
    }
  };
  emit(Domain::Source, src_centers, out.source);
  emit(Domain::Target, tgt_centers, out.target);
  return out;
}

}  // namespace ureid
