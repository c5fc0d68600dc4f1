// Dense feed-forward classifier: ReLU hidden layers, softmax output.
// Includes the training objective (KL to soft labels minus an entropy
// regularizer) and its analytic gradient via backpropagation.
//
// Batches are column-per-sample matrices: inputs d x B, labels k x B.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "hampbench/errors.hpp"
#include "hampbench/prob.hpp"
#include "hampbench/random.hpp"

namespace hampbench {

struct MlpModel {
  std::vector<int> layer_dims;      // [input, hidden..., output]
  std::vector<MatrixXd> weights;    // weights[i]: dims[i+1] x dims[i]
  std::vector<VectorXd> biases;     // biases[i]: dims[i+1]

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  int num_layers() const { return static_cast<int>(weights.size()); }

  /// Uniform init in +-sqrt(6 / fan_in), biases zero.
  static MlpModel init(const std::vector<int>& dims, Rng& rng) {
    if (dims.size() < 2) throw ConfigError("model needs at least input and output dims");
    for (int d : dims)
      if (d <= 0) throw ConfigError("layer dims must be positive");
    MlpModel m;
    m.layer_dims = dims;
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
      const int fan_in = dims[i], fan_out = dims[i + 1];
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      MatrixXd w(fan_out, fan_in);
      for (int c = 0; c < fan_in; ++c)
        for (int r = 0; r < fan_out; ++r) w(r, c) = rng.next_uniform(-bound, bound);
      m.weights.push_back(std::move(w));
      m.biases.push_back(VectorXd::Zero(fan_out));
    }
    return m;
  }

  bool same_shape_as(const MlpModel& other) const {
    return layer_dims == other.layer_dims;
  }
};

/// Partial derivatives of a scalar objective, shape-congruent with a model.
struct GradientSet {
  std::vector<MatrixXd> weights;
  std::vector<VectorXd> biases;

  static GradientSet zero_like(const MlpModel& m) {
    GradientSet g;
    for (int i = 0; i < m.num_layers(); ++i) {
      g.weights.push_back(MatrixXd::Zero(m.weights[i].rows(), m.weights[i].cols()));
      g.biases.push_back(VectorXd::Zero(m.biases[i].size()));
    }
    return g;
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& w : weights) s += w.squaredNorm();
    for (const auto& b : biases) s += b.squaredNorm();
    return s;
  }
};

namespace detail {

inline void check_batch(const MlpModel& m, const MatrixXd& x) {
  if (x.rows() != m.input_dim())
    throw Error("input has " + std::to_string(x.rows()) + " features, model expects " +
                std::to_string(m.input_dim()));
}

// Column-wise log-softmax, max-subtracted.
inline MatrixXd log_softmax_cols(MatrixXd z) {
  for (int c = 0; c < z.cols(); ++c) {
    const double m = z.col(c).maxCoeff();
    z.col(c).array() -= m;
    const double lse = std::log(z.col(c).array().exp().sum());
    z.col(c).array() -= lse;
  }
  return z;
}

}  // namespace detail

/// Final-layer logits for a batch (d x B in, k x B out).
inline MatrixXd forward_logits_batch(const MlpModel& m, const MatrixXd& x) {
  detail::check_batch(m, x);
  MatrixXd h = x;
  const int last = m.num_layers() - 1;
  for (int i = 0; i < last; ++i)
    h = ((m.weights[i] * h).colwise() + m.biases[i]).cwiseMax(0.0);
  return (m.weights[last] * h).colwise() + m.biases[last];
}

inline MatrixXd forward_probs_batch(const MlpModel& m, const MatrixXd& x) {
  MatrixXd z = forward_logits_batch(m, x);
  for (int c = 0; c < z.cols(); ++c) {
    const double mx = z.col(c).maxCoeff();
    z.col(c) = (z.col(c).array() - mx).exp();
    z.col(c) /= z.col(c).sum();
  }
  return z;
}

/// Raw logits for one sample; attack feature extractors use these only via
/// the black-box oracle, never directly.
inline VectorXd forward_logits(const MlpModel& m, const VectorXd& x) {
  return forward_logits_batch(m, x);
}

inline ProbabilityVector forward(const MlpModel& m, const VectorXd& x) {
  return softmax(forward_logits(m, x));
}

/// Predicted labels (argmax of logits) for a batch.
inline std::vector<int> predict_batch(const MlpModel& m, const MatrixXd& x) {
  const MatrixXd z = forward_logits_batch(m, x);
  std::vector<int> out(static_cast<size_t>(z.cols()));
  for (int c = 0; c < z.cols(); ++c) {
    int best = 0;
    for (int r = 1; r < z.rows(); ++r)
      if (z(r, c) > z(best, c)) best = r;  // ties resolve to the lowest index
    out[static_cast<size_t>(c)] = best;
  }
  return out;
}

/// Mean over the batch of  KL(y' || softmax(z))  -  alpha * H(softmax(z)).
/// Log-probabilities come straight from log-softmax, so objective and
/// gradient share one numerical path.
inline double hamp_objective(const MlpModel& m, const MatrixXd& batch_x,
                             const MatrixXd& batch_y_soft, double alpha) {
  if (alpha < 0.0) throw ConfigError("regularizer strength must be >= 0");
  if (batch_x.cols() != batch_y_soft.cols())
    throw Error("batch size mismatch between inputs and labels");
  const MatrixXd lsm = detail::log_softmax_cols(forward_logits_batch(m, batch_x));
  const int batch = static_cast<int>(batch_x.cols());
  double total = 0.0;
  for (int c = 0; c < batch; ++c) {
    double kl = 0.0;
    for (int r = 0; r < lsm.rows(); ++r) {
      const double y = batch_y_soft(r, c);
      if (y > 0.0) kl += y * (std::log(y) - lsm(r, c));
    }
    total += kl;
    if (alpha != 0.0) {
      double h = 0.0;
      for (int r = 0; r < lsm.rows(); ++r) h -= std::exp(lsm(r, c)) * lsm(r, c);
      total -= alpha * h;
    }
  }
  return total / static_cast<double>(batch);
}

/// Analytic gradient of hamp_objective by backpropagation. In logit space the
/// KL term contributes (p - y') and the entropy regularizer contributes
/// alpha * p_i * (ln p_i + H(p)) per sample, averaged over the batch.
/// When objective_out is non-null it receives the batch objective as a free
/// by-product (same arithmetic as hamp_objective).
inline GradientSet hamp_gradient(const MlpModel& m, const MatrixXd& batch_x,
                                 const MatrixXd& batch_y_soft, double alpha,
                                 double* objective_out = nullptr) {
  if (alpha < 0.0) throw ConfigError("regularizer strength must be >= 0");
  if (batch_x.cols() != batch_y_soft.cols())
    throw Error("batch size mismatch between inputs and labels");
  detail::check_batch(m, batch_x);

  const int last = m.num_layers() - 1;
  const int batch = static_cast<int>(batch_x.cols());

  // Forward pass, keeping post-activation values per layer.
  std::vector<MatrixXd> acts;
  acts.reserve(static_cast<size_t>(last) + 1);
  acts.push_back(batch_x);
  for (int i = 0; i < last; ++i)
    acts.push_back(((m.weights[i] * acts.back()).colwise() + m.biases[i]).cwiseMax(0.0));
  const MatrixXd lsm =
      detail::log_softmax_cols((m.weights[last] * acts.back()).colwise() + m.biases[last]);
  const MatrixXd probs = lsm.array().exp().matrix();

  if (objective_out != nullptr) {
    double total = 0.0;
    for (int c = 0; c < batch; ++c) {
      double kl = 0.0;
      for (int r = 0; r < lsm.rows(); ++r) {
        const double y = batch_y_soft(r, c);
        if (y > 0.0) kl += y * (std::log(y) - lsm(r, c));
      }
      total += kl;
      if (alpha != 0.0) {
        double h = 0.0;
        for (int r = 0; r < lsm.rows(); ++r) h -= probs(r, c) * lsm(r, c);
        total -= alpha * h;
      }
    }
    *objective_out = total / static_cast<double>(batch);
  }

  // Logit-space error signal, already averaged over the batch.
  MatrixXd delta = (probs - batch_y_soft) / static_cast<double>(batch);
  if (alpha != 0.0) {
    for (int c = 0; c < probs.cols(); ++c) {
      double h = 0.0;
      for (int r = 0; r < probs.rows(); ++r) h -= probs(r, c) * lsm(r, c);
      delta.col(c) +=
          (alpha / static_cast<double>(batch)) * (probs.col(c).array() * (lsm.col(c).array() + h)).matrix();
    }
  }

  GradientSet g;
  g.weights.resize(static_cast<size_t>(last) + 1);
  g.biases.resize(static_cast<size_t>(last) + 1);
  for (int i = last; i >= 0; --i) {
    g.weights[static_cast<size_t>(i)] = delta * acts[static_cast<size_t>(i)].transpose();
    g.biases[static_cast<size_t>(i)] = delta.rowwise().sum();
    if (i > 0) {
      delta = m.weights[static_cast<size_t>(i)].transpose() * delta;
      // ReLU mask: gradient flows only where the activation was positive.
      delta = (acts[static_cast<size_t>(i)].array() > 0.0).select(delta, 0.0);
    }
  }
  return g;
}

struct SgdConfig {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
};

/// Velocity state; owned by a single trainer instance.
struct SgdState {
  GradientSet velocity;

  static SgdState zero_like(const MlpModel& m) { return SgdState{GradientSet::zero_like(m)}; }
};

/// Classical momentum update:
///   v <- momentum * v + (g + weight_decay * w);  w <- w - lr * v.
inline void sgd_step(MlpModel& m, const GradientSet& grads, SgdState& state,
                     const SgdConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
    throw ConfigError("momentum must lie in [0,1)");
  if (cfg.weight_decay < 0.0) throw ConfigError("weight decay must be >= 0");
  for (int i = 0; i < m.num_layers(); ++i) {
    auto& vw = state.velocity.weights[static_cast<size_t>(i)];
    auto& vb = state.velocity.biases[static_cast<size_t>(i)];
    vw = cfg.momentum * vw + grads.weights[static_cast<size_t>(i)];
    vb = cfg.momentum * vb + grads.biases[static_cast<size_t>(i)];
    if (cfg.weight_decay != 0.0) {
      vw += cfg.weight_decay * m.weights[static_cast<size_t>(i)];
      vb += cfg.weight_decay * m.biases[static_cast<size_t>(i)];
    }
    m.weights[static_cast<size_t>(i)] -= cfg.lr * vw;
    m.biases[static_cast<size_t>(i)] -= cfg.lr * vb;
  }
}

}  // namespace hampbench
