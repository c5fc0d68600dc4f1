#include <cmath>

#include <gtest/gtest.h>

#include "hampbench/errors.hpp"
#include "hampbench/labels.hpp"
#include "hampbench/prob.hpp"

namespace hb = hampbench;

TEST(SolveGroundTruthProbability, ExactEndpoints) {
  for (int k : {2, 5, 20, 100}) {
    EXPECT_DOUBLE_EQ(hb::solve_ground_truth_probability(k, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(hb::solve_ground_truth_probability(k, 1.0), 1.0 / k);
  }
}

TEST(SolveGroundTruthProbability, FrozenBinaryOracle) {
  // H(0.6) in a two-class label is 0.6730116670092565 nats (computed
  // independently), i.e. gamma = H(0.6)/ln 2; the solver must return 0.6.
  const double gamma = 0.6730116670092565 / std::log(2.0);
  EXPECT_NEAR(hb::solve_ground_truth_probability(2, gamma), 0.6, 1e-9);
}

TEST(SolveGroundTruthProbability, MeetsEntropyTargetAcrossGrid) {
  // Independent check through the generic entropy() over the realized label.
  for (int k : {2, 3, 5, 10, 20, 50, 100}) {
    for (double gamma : {0.05, 0.1, 0.3, 0.5, 0.7, 0.8, 0.9, 0.95, 0.99}) {
      const hb::SoftLabelSpec spec = hb::SoftLabelSpec::make(k, gamma);
      const hb::ProbabilityVector label = hb::make_soft_label(0, spec);
      EXPECT_NEAR(hb::entropy(label), gamma * std::log(static_cast<double>(k)), 1e-9)
          << "k=" << k << " gamma=" << gamma;
      EXPECT_GE(spec.p, 1.0 / k - 1e-12);
      EXPECT_LE(spec.p, 1.0);
    }
  }
}

TEST(SolveGroundTruthProbability, MonotoneInGamma) {
  for (int k : {2, 10, 20}) {
    double prev = 1.1;
    for (double gamma : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const double p = hb::solve_ground_truth_probability(k, gamma);
      EXPECT_LT(p, prev) << "k=" << k << " gamma=" << gamma;
      prev = p;
    }
  }
}

TEST(SolveGroundTruthProbability, RejectsBadArguments) {
  EXPECT_THROW(hb::solve_ground_truth_probability(1, 0.5), hb::ConfigError);
  EXPECT_THROW(hb::solve_ground_truth_probability(2, -0.1), hb::ConfigError);
  EXPECT_THROW(hb::solve_ground_truth_probability(2, 1.0001), hb::ConfigError);
}

TEST(MakeSoftLabel, StructureAndArgmax) {
  const hb::SoftLabelSpec spec = hb::SoftLabelSpec::make(5, 0.8);
  const hb::ProbabilityVector label = hb::make_soft_label(2, spec);
  EXPECT_EQ(label.size(), 5);
  EXPECT_EQ(label.argmax(), 2);
  EXPECT_NEAR(label.values().sum(), 1.0, 1e-12);
  const double off = label[0];
  for (int j : {0, 1, 3, 4}) EXPECT_DOUBLE_EQ(label[j], off);
  EXPECT_GT(label[2], off);
}

TEST(MakeSoftLabel, GammaZeroIsExactOneHot) {
  const hb::SoftLabelSpec spec = hb::SoftLabelSpec::make(7, 0.0);
  const hb::ProbabilityVector label = hb::make_soft_label(3, spec);
  for (int j = 0; j < 7; ++j)
    EXPECT_EQ(label[j], j == 3 ? 1.0 : 0.0) << "entry " << j << " must be exact";
}

TEST(MakeSoftLabel, RejectsOutOfRangeTruth) {
  const hb::SoftLabelSpec spec = hb::SoftLabelSpec::make(4, 0.5);
  EXPECT_THROW(hb::make_soft_label(-1, spec), hb::ConfigError);
  EXPECT_THROW(hb::make_soft_label(4, spec), hb::ConfigError);
}

TEST(MakeSmoothLabel, FrozenMixture) {
  // intensity 0.3 at k=3: (1-0.3)*onehot + 0.3*uniform = (0.8, 0.1, 0.1).
  const hb::ProbabilityVector label = hb::make_smooth_label(0, hb::SmoothLabelSpec{3, 0.3});
  EXPECT_NEAR(label[0], 0.8, 1e-15);
  EXPECT_NEAR(label[1], 0.1, 1e-15);
  EXPECT_NEAR(label[2], 0.1, 1e-15);
}

TEST(MakeSmoothLabel, ZeroIntensityIsOneHot) {
  const hb::ProbabilityVector label = hb::make_smooth_label(1, hb::SmoothLabelSpec{3, 0.0});
  EXPECT_EQ(label[0], 0.0);
  EXPECT_EQ(label[1], 1.0);
  EXPECT_EQ(label[2], 0.0);
}

TEST(MakeSmoothLabel, Validation) {
  EXPECT_THROW(hb::make_smooth_label(0, hb::SmoothLabelSpec{1, 0.1}), hb::ConfigError);
  EXPECT_THROW(hb::make_smooth_label(0, hb::SmoothLabelSpec{3, 1.0}), hb::ConfigError);
  EXPECT_THROW(hb::make_smooth_label(0, hb::SmoothLabelSpec{3, -0.1}), hb::ConfigError);
  EXPECT_THROW(hb::make_smooth_label(3, hb::SmoothLabelSpec{3, 0.1}), hb::ConfigError);
}

TEST(SoftLabelEntropy, MatchesGenericEntropy) {
  // soft_label_entropy must agree with entropy() on the realized vector.
  for (int k : {2, 4, 9}) {
    for (double p : {1.0 / k, 0.3, 0.6, 0.99, 1.0}) {
      if (p < 1.0 / k) continue;
      hb::VectorXd v = hb::VectorXd::Constant(k, (1.0 - p) / (k - 1));
      v[0] = p;
      EXPECT_NEAR(hb::soft_label_entropy(p, k), hb::entropy(hb::ProbabilityVector(v)), 1e-12);
    }
  }
}
