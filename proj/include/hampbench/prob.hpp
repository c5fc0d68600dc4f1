// Probability vectors and the scalar information measures the workbench is
// built on: softmax, Shannon entropy, KL divergence and logit scaling.
// Natural logarithm throughout.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "hampbench/errors.hpp"

namespace hampbench {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Probabilities are clamped to [kLogEps, 1 - kLogEps] before any logarithm,
// keeping KL and logit values finite without visibly perturbing them.
inline constexpr double kLogEps = 1e-12;

// Max |sum - 1| tolerated for a probability vector.
inline constexpr double kProbSumTol = 1e-9;

/// Length-k vector with nonnegative entries summing to 1 (within 1e-9).
/// Model outputs and all soft labels use this type.
class ProbabilityVector {
 public:
  explicit ProbabilityVector(VectorXd values) : values_(std::move(values)) {
    if (values_.size() == 0) throw Error("probability vector must be non-empty");
    if ((values_.array() < 0.0).any())
      throw Error("probability vector has a negative entry");
    const double sum = values_.sum();
    if (std::abs(sum - 1.0) > kProbSumTol)
      throw Error("probability vector sums to " + std::to_string(sum) +
                  ", expected 1 within 1e-9");
  }

  const VectorXd& values() const { return values_; }
  int size() const { return static_cast<int>(values_.size()); }
  double operator[](int i) const { return values_[i]; }

  /// Index of the largest entry; ties broken by lowest index.
  int argmax() const {
    int best = 0;
    for (int i = 1; i < size(); ++i)
      if (values_[i] > values_[best]) best = i;
    return best;
  }

 private:
  VectorXd values_;
};

/// Numerically stable softmax (max-subtraction before exponentiation).
inline ProbabilityVector softmax(const VectorXd& logits) {
  const double m = logits.maxCoeff();
  VectorXd e = (logits.array() - m).exp();
  e /= e.sum();
  return ProbabilityVector(std::move(e));
}

/// Shannon entropy in nats, -sum p ln p, with the 0 ln 0 = 0 convention.
inline double entropy(const ProbabilityVector& p) {
  double h = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    const double v = p[i];
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

/// KL divergence sum_j y_j ln(y_j / p_j) of label y from prediction p.
/// p is clamped below by kLogEps; terms with y_j = 0 contribute nothing.
inline double kl_loss(const ProbabilityVector& p, const ProbabilityVector& y) {
  if (p.size() != y.size()) throw Error("kl_loss: length mismatch");
  double d = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    const double yi = y[i];
    if (yi > 0.0) d += yi * std::log(yi / std::max(p[i], kLogEps));
  }
  return d;
}

/// ln(p / (1 - p)) with p clamped into [kLogEps, 1 - kLogEps] first.
inline double logit_scale(double p) {
  const double c = std::min(std::max(p, kLogEps), 1.0 - kLogEps);
  return std::log(c / (1.0 - c));
}

}  // namespace hampbench
