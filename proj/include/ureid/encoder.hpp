#pragma once

#include "ureid/common.hpp"
#include "ureid/rng.hpp"

#include <string>
#include <vector>

namespace ureid {

// Small MLP encoder with tanh hidden layers and an L2-normalization output
// layer; forward/backward are hand-derived. Batches are row-major: one sample
// per row.
class Mlp {
 public:
  struct ForwardCache {
    std::vector<Mat> layer_inputs;  // input to linear layer l, l = 0..L-1
    Mat pre_norm;                   // last linear output, before normalization
    Vec norms;                      // per-row L2 norm of pre_norm
    Mat output;                     // normalized features
  };

  struct Gradients {
    std::vector<Mat> w;
    std::vector<Vec> b;

    void setZero();
    Gradients& operator+=(const Gradients& other);
  };

  explicit Mlp(std::vector<int> layer_sizes);

  // Fan-in-scaled Gaussian weights, zero biases; deterministic for a given rng state.
  void init_random(Rng& rng);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  int n_layers() const { return static_cast<int>(weights_.size()); }

  Mat& weight(int layer) { return weights_[static_cast<std::size_t>(layer)]; }
  Vec& bias(int layer) { return biases_[static_cast<std::size_t>(layer)]; }
  const Mat& weight(int layer) const { return weights_[static_cast<std::size_t>(layer)]; }
  const Vec& bias(int layer) const { return biases_[static_cast<std::size_t>(layer)]; }

  // Returns unit-norm feature rows; fills `cache` when given (needed for backward).
  Mat forward(const Mat& batch, ForwardCache* cache = nullptr) const;

  // grad_output: dLoss/dFeatures, one row per sample. Includes the Jacobian of
  // the normalization layer: for y = a/|a|, dL/da = (g - y (y.g)) / |a|.
  Gradients backward(const ForwardCache& cache, const Mat& grad_output) const;

  Gradients zero_gradients() const;

  bool all_finite() const;

  // Text checkpoint, %.17g so reload is bit-exact. Layout documented in README.
  void save(const std::string& path) const;
  static Mlp load(const std::string& path);

 private:
  std::vector<int> sizes_;
  std::vector<Mat> weights_;  // W[l] is (sizes[l+1] x sizes[l])
  std::vector<Vec> biases_;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0005;
};

struct AdamState {
  AdamConfig cfg;
  std::vector<Mat> m_w, v_w;
  std::vector<Vec> m_b, v_b;
  long step = 0;

  static AdamState init(const Mlp& params, AdamConfig cfg = {});
};

// Adam with decoupled weight decay (applied as lr*decay*param subtraction).
// Throws NumericError if any parameter becomes non-finite.
void adam_step(Mlp& params, const Mlp::Gradients& grads, AdamState& state, double lr);

}  // namespace ureid
