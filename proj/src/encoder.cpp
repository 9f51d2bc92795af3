#include "ureid/encoder.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ureid {

void Mlp::Gradients::setZero() {
  for (auto& g : w) g.setZero();
  for (auto& g : b) g.setZero();
}

Mlp::Gradients& Mlp::Gradients::operator+=(const Gradients& other) {
  for (std::size_t l = 0; l < w.size(); ++l) w[l] += other.w[l];
  for (std::size_t l = 0; l < b.size(); ++l) b[l] += other.b[l];
  return *this;
}

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw ConfigError("encoder needs at least [D_in, D] layer sizes");
  for (const int s : sizes_) {
    if (s < 1) throw ConfigError("encoder layer sizes must be positive");
  }
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    weights_.emplace_back(Mat::Zero(sizes_[l + 1], sizes_[l]));
    biases_.emplace_back(Vec::Zero(sizes_[l + 1]));
  }
}

void Mlp::init_random(Rng& rng) {
  // 0.5/sqrt(fan_in) keeps unit-norm inputs in the near-linear region of tanh
  // at initialization, so the untrained encoder is close to a random isometry.
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const double scale = 0.5 / std::sqrt(static_cast<double>(weights_[l].cols()));
    for (Eigen::Index r = 0; r < weights_[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < weights_[l].cols(); ++c) {
        weights_[l](r, c) = scale * rng.normal();
      }
    }
    biases_[l].setZero();
  }
}

Mat Mlp::forward(const Mat& batch, ForwardCache* cache) const {
  if (batch.cols() != sizes_.front()) {
    throw ContractError("forward: batch has " + std::to_string(batch.cols()) +
                        " columns, encoder expects " + std::to_string(sizes_.front()));
  }
  if (!batch.allFinite()) throw NumericError("forward: non-finite input");

  Mat h = batch;
  std::vector<Mat> layer_inputs;
  if (cache) layer_inputs.push_back(h);
  const int L = n_layers();
  Mat a;
  for (int l = 0; l < L; ++l) {
    a = h * weights_[static_cast<std::size_t>(l)].transpose();
    a.rowwise() += biases_[static_cast<std::size_t>(l)].transpose();
    if (l + 1 < L) {
      h = a.array().tanh().matrix();
      if (cache) layer_inputs.push_back(h);
    }
  }

  Vec norms = a.rowwise().norm();
  Mat y(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double n = norms[i];
    if (!std::isfinite(n) || n <= 0.0) {
      throw NumericError("forward: zero or non-finite pre-normalization feature at row " +
                         std::to_string(i));
    }
    y.row(i) = a.row(i) / n;
  }

  if (cache) {
    cache->layer_inputs = std::move(layer_inputs);
    cache->pre_norm = std::move(a);
    cache->norms = std::move(norms);
    cache->output = y;
  }
  return y;
}

Mlp::Gradients Mlp::backward(const ForwardCache& cache, const Mat& grad_output) const {
  const int L = n_layers();
  if (grad_output.rows() != cache.output.rows() || grad_output.cols() != cache.output.cols()) {
    throw ContractError("backward: gradient shape does not match cached batch");
  }

  Gradients grads = zero_gradients();

  // Normalization layer: project out the radial component, then scale by 1/|a|.
  Mat g_pre(grad_output.rows(), grad_output.cols());
  for (Eigen::Index i = 0; i < grad_output.rows(); ++i) {
    const auto y = cache.output.row(i);
    const auto g = grad_output.row(i);
    g_pre.row(i) = (g - y * y.dot(g)) / cache.norms[i];
  }

  Mat g_act = std::move(g_pre);  // gradient w.r.t. linear layer output
  for (int l = L - 1; l >= 0; --l) {
    const Mat& input = cache.layer_inputs[static_cast<std::size_t>(l)];
    grads.w[static_cast<std::size_t>(l)] = g_act.transpose() * input;
    grads.b[static_cast<std::size_t>(l)] = g_act.colwise().sum().transpose();
    if (l > 0) {
      Mat g_h = g_act * weights_[static_cast<std::size_t>(l)];
      // tanh'(x) = 1 - tanh(x)^2, with tanh(x) already cached as the layer input.
      g_act = (g_h.array() * (1.0 - input.array().square())).matrix();
    }
  }
  return grads;
}

Mlp::Gradients Mlp::zero_gradients() const {
  Gradients g;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    g.w.push_back(Mat::Zero(weights_[l].rows(), weights_[l].cols()));
    g.b.push_back(Vec::Zero(biases_[l].size()));
  }
  return g;
}

bool Mlp::all_finite() const {
  for (const auto& w : weights_) {
    if (!w.allFinite()) return false;
  }
  for (const auto& b : biases_) {
    if (!b.allFinite()) return false;
  }
  return true;
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void Mlp::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out << "ureid-mlp 1\n";
  out << "sizes";
  for (const int s : sizes_) out << ' ' << s;
  out << "\n";
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out << "W " << l << "\n";
    for (Eigen::Index r = 0; r < weights_[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < weights_[l].cols(); ++c) {
        out << (c ? " " : "") << fmt17(weights_[l](r, c));
      }
      out << "\n";
    }
    out << "b " << l << "\n";
    for (Eigen::Index r = 0; r < biases_[l].size(); ++r) {
      out << (r ? " " : "") << fmt17(biases_[l][r]);
    }
    out << "\n";
  }
}

Mlp Mlp::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "ureid-mlp" || version != 1) {
    throw DataError(path + ": not a version-1 encoder checkpoint");
  }
  std::string tag;
  in >> tag;
  if (tag != "sizes") throw DataError(path + ": expected `sizes`");
  std::string rest;
  std::getline(in, rest);
  std::istringstream szs(rest);
  std::vector<int> sizes;
  int s = 0;
  while (szs >> s) sizes.push_back(s);
  Mlp mlp(sizes);
  for (int l = 0; l < mlp.n_layers(); ++l) {
    int idx = -1;
    in >> tag >> idx;
    if (tag != "W" || idx != l) throw DataError(path + ": expected `W " + std::to_string(l) + "`");
    auto& w = mlp.weight(l);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        if (!(in >> w(r, c))) throw DataError(path + ": truncated weight matrix " + std::to_string(l));
      }
    }
    in >> tag >> idx;
    if (tag != "b" || idx != l) throw DataError(path + ": expected `b " + std::to_string(l) + "`");
    auto& b = mlp.bias(l);
    for (Eigen::Index r = 0; r < b.size(); ++r) {
      if (!(in >> b[r])) throw DataError(path + ": truncated bias vector " + std::to_string(l));
    }
  }
  return mlp;
}

AdamState AdamState::init(const Mlp& params, AdamConfig cfg) {
  AdamState st;
  st.cfg = cfg;
  for (int l = 0; l < params.n_layers(); ++l) {
    st.m_w.push_back(Mat::Zero(params.weight(l).rows(), params.weight(l).cols()));
    st.v_w.push_back(Mat::Zero(params.weight(l).rows(), params.weight(l).cols()));
    st.m_b.push_back(Vec::Zero(params.bias(l).size()));
    st.v_b.push_back(Vec::Zero(params.bias(l).size()));
  }
  return st;
}

void adam_step(Mlp& params, const Mlp::Gradients& grads, AdamState& state, double lr) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.cfg.beta2, static_cast<double>(state.step));

  const auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = state.cfg.beta1 * m + (1.0 - state.cfg.beta1) * g;
    v = state.cfg.beta2 * v + (1.0 - state.cfg.beta2) * g.array().square().matrix();
    const auto m_hat = m / bc1;
    const auto v_hat = v / bc2;
    // Decoupled decay: both terms use the pre-step parameter value.
    const auto decay = ((lr * state.cfg.weight_decay) * p).eval();
    p -= lr * (m_hat.array() / (v_hat.array().sqrt() + state.cfg.eps)).matrix();
    p -= decay;
  };

  for (int l = 0; l < params.n_layers(); ++l) {
    const auto li = static_cast<std::size_t>(l);
    update(params.weight(l), state.m_w[li], state.v_w[li], grads.w[li]);
    update(params.bias(l), state.m_b[li], state.v_b[li], grads.b[li]);
  }
  if (!params.all_finite()) throw NumericError("adam_step produced non-finite parameters");
}

}  // namespace ureid
