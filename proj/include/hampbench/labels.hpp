// Soft-label construction: high-entropy labels parameterized by an entropy
// threshold gamma, and classic label-smoothing mixtures.
#pragma once

#include <cmath>
#include <string>

#include "hampbench/errors.hpp"
#include "hampbench/prob.hpp"

namespace hampbench {

/// Entropy of the symmetric soft label (p on the truth class, the remaining
/// mass spread evenly over the other k-1 classes).
inline double soft_label_entropy(double p, int k) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  const double q = (1.0 - p) / static_cast<double>(k - 1);
  if (q > 0.0) h -= (1.0 - p) * std::log(q);
  return h;
}

/// Solves for the ground-truth probability p so the induced soft label meets
/// the entropy threshold: the unique root of H(p) = gamma * ln k on [1/k, 1].
/// H is strictly decreasing there, so bisection converges; taking the root
/// (largest admissible p) keeps the label as informative as the constraint
/// allows. Tolerance 1e-12 in p.
inline double solve_ground_truth_probability(int k, double gamma) {
  if (k < 2) throw ConfigError("soft labels need k >= 2, got k=" + std::to_string(k));
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw ConfigError("entropy threshold must lie in [0,1], got " + std::to_string(gamma));
  if (gamma == 0.0) return 1.0;  // hard label, entropy 0 >= 0
  const double uniform = 1.0 / static_cast<double>(k);
  if (gamma == 1.0) return uniform;  // only the uniform label attains ln k
  const double target = gamma * std::log(static_cast<double>(k));
  double lo = uniform, hi = 1.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (soft_label_entropy(mid, k) >= target)
      lo = mid;  // entropy still above threshold, can push p higher
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// High-entropy soft label recipe for a k-class problem.
struct SoftLabelSpec {
  int k = 2;
  double gamma = 0.0;
  double p = 1.0;  // derived ground-truth probability

  static SoftLabelSpec make(int k, double gamma) {
    return SoftLabelSpec{k, gamma, solve_ground_truth_probability(k, gamma)};
  }
};

/// Soft label with entry p at the truth class and (1-p)/(k-1) elsewhere.
/// The argmax stays at the truth class for every gamma < 1.
inline ProbabilityVector make_soft_label(int truth_class, const SoftLabelSpec& spec) {
  if (truth_class < 0 || truth_class >= spec.k)
    throw ConfigError("truth class " + std::to_string(truth_class) +
                      " out of range for k=" + std::to_string(spec.k));
  const double off = (1.0 - spec.p) / static_cast<double>(spec.k - 1);
  VectorXd v = VectorXd::Constant(spec.k, off);
  v[truth_class] = spec.p;
  return ProbabilityVector(std::move(v));
}

/// Label-smoothing recipe: mixture of one-hot and uniform.
struct SmoothLabelSpec {
  int k = 2;
  double intensity = 0.0;  // in [0, 1)
};

/// (1-intensity) * onehot + intensity * uniform. Intensity 0.3 at k=3 yields
/// (0.8, 0.1, 0.1): the truth class keeps 1 - intensity plus its share of the
/// uniform mass.
inline ProbabilityVector make_smooth_label(int truth_class, const SmoothLabelSpec& spec) {
  if (spec.k < 2) throw ConfigError("smooth labels need k >= 2");
  if (!(spec.intensity >= 0.0 && spec.intensity < 1.0))
    throw ConfigError("smoothing intensity must lie in [0,1)");
  if (truth_class < 0 || truth_class >= spec.k)
    throw ConfigError("truth class out of range");
  const double share = spec.intensity / static_cast<double>(spec.k);
  VectorXd v = VectorXd::Constant(spec.k, share);
  v[truth_class] += 1.0 - spec.intensity;
  return ProbabilityVector(std::move(v));
}

}  // namespace hampbench
