#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "hampbench/metrics.hpp"
#include "test_support.hpp"

namespace hb = hampbench;
namespace ts = testsupport;
namespace fs = std::filesystem;

namespace {

hb::MembershipScoreSet score_set(const std::vector<double>& member_scores,
                                 const std::vector<double>& nonmember_scores) {
  hb::MembershipScoreSet s;
  s.attack_name = "fixture";
  int id = 0;
  for (double v : member_scores) {
    s.sample_ids.push_back(id++);
    s.scores.push_back(v);
    s.is_member.push_back(true);
  }
  for (double v : nonmember_scores) {
    s.sample_ids.push_back(id++);
    s.scores.push_back(v);
    s.is_member.push_back(false);
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// ROC sweep
// ---------------------------------------------------------------------------

TEST(Roc, HandExampleSweepAndAuc) {
  // Members {0.9, 0.6}, non-members {0.7, 0.2}: three winning pairs of four.
  const hb::RocSummary rs = hb::roc(score_set({0.9, 0.6}, {0.7, 0.2}));
  EXPECT_DOUBLE_EQ(rs.auc, 0.75);
  EXPECT_EQ(rs.num_members, 2);
  EXPECT_EQ(rs.num_nonmembers, 2);

  ASSERT_EQ(rs.points.size(), 5u);
  // Leading empty-acceptance point.
  EXPECT_TRUE(std::isinf(rs.points[0].threshold));
  EXPECT_EQ(rs.points[0].tp, 0);
  EXPECT_EQ(rs.points[0].fp, 0);
  EXPECT_EQ(rs.points[0].tn, 2);
  EXPECT_EQ(rs.points[0].fn, 2);
  EXPECT_DOUBLE_EQ(rs.points[0].tnr, 1.0);
  // tau = 0.9: one member accepted.
  EXPECT_DOUBLE_EQ(rs.points[1].threshold, 0.9);
  EXPECT_EQ(rs.points[1].tp, 1);
  EXPECT_EQ(rs.points[1].fp, 0);
  EXPECT_DOUBLE_EQ(rs.points[1].tpr, 0.5);
  EXPECT_DOUBLE_EQ(rs.points[1].fpr, 0.0);
  // tau = 0.7: the top non-member joins.
  EXPECT_EQ(rs.points[2].tp, 1);
  EXPECT_EQ(rs.points[2].fp, 1);
  // tau = 0.6, then tau = 0.2 accept everything.
  EXPECT_EQ(rs.points[3].tp, 2);
  EXPECT_EQ(rs.points[3].fp, 1);
  EXPECT_EQ(rs.points[4].tp, 2);
  EXPECT_EQ(rs.points[4].fp, 2);
  EXPECT_DOUBLE_EQ(rs.points[4].tpr, 1.0);
  EXPECT_DOUBLE_EQ(rs.points[4].fpr, 1.0);
}

TEST(Roc, TiesMoveAtomically) {
  // All four scores identical: a single sweep step, AUC exactly one half.
  const hb::RocSummary rs = hb::roc(score_set({0.5, 0.5}, {0.5, 0.5}));
  ASSERT_EQ(rs.points.size(), 2u);
  EXPECT_EQ(rs.points[1].tp, 2);
  EXPECT_EQ(rs.points[1].fp, 2);
  EXPECT_DOUBLE_EQ(rs.auc, 0.5);

  // Cross-class tie at 0.5 counts half: AUC = (2*3 + 1) / (2*4) = 0.875.
  const hb::RocSummary rs2 = hb::roc(score_set({0.8, 0.5}, {0.5, 0.2}));
  EXPECT_DOUBLE_EQ(rs2.auc, 0.875);
}

TEST(Roc, PerfectAndInvertedSeparation) {
  const hb::RocSummary good = hb::roc(score_set({1.0, 2.0, 3.0}, {-1.0, -2.0}));
  EXPECT_DOUBLE_EQ(good.auc, 1.0);
  EXPECT_DOUBLE_EQ(hb::tpr_at_fpr(good, 0.01).value, 1.0);
  EXPECT_DOUBLE_EQ(hb::tnr_at_fnr(good, 0.01).value, 1.0);

  const hb::RocSummary bad = hb::roc(score_set({-1.0, -2.0}, {1.0, 2.0, 3.0}));
  EXPECT_DOUBLE_EQ(bad.auc, 0.0);
  EXPECT_DOUBLE_EQ(hb::tpr_at_fpr(bad, 0.01).value, 0.0);
}

TEST(Roc, RejectsSingleClassSets) {
  EXPECT_THROW(hb::roc(score_set({0.5, 0.6}, {})), hb::MetricError);
  EXPECT_THROW(hb::roc(score_set({}, {0.5})), hb::MetricError);
}

TEST(RateReadouts, HandExampleAndResolutionFlag) {
  const hb::RocSummary rs = hb::roc(score_set({0.9, 0.6}, {0.7, 0.2}));
  // At FPR <= 0.5 one false positive is allowed, which admits both members.
  EXPECT_DOUBLE_EQ(hb::tpr_at_fpr(rs, 0.5).value, 1.0);
  EXPECT_FALSE(hb::tpr_at_fpr(rs, 0.5).below_resolution);
  // Just under one count of resolution: only fp = 0 qualifies.
  EXPECT_DOUBLE_EQ(hb::tpr_at_fpr(rs, 0.49).value, 0.5);
  EXPECT_TRUE(hb::tpr_at_fpr(rs, 0.49).below_resolution);
  // Low tail: discarding one member keeps both non-members.
  EXPECT_DOUBLE_EQ(hb::tnr_at_fnr(rs, 0.5).value, 1.0);

  EXPECT_THROW(hb::tpr_at_fpr(rs, 0.0), hb::MetricError);
  EXPECT_THROW(hb::tpr_at_fpr(rs, 1.0), hb::MetricError);
  EXPECT_THROW(hb::tnr_at_fnr(rs, -0.2), hb::MetricError);
}

TEST(RateReadouts, MatchBruteForceOracleExactly) {
  hb::Rng rng(2024);
  const std::vector<double> levels = {0.001, 0.01, 0.05, 0.1, 0.31};
  for (int trial = 0; trial < 200; ++trial) {
    const hb::MembershipScoreSet s = ts::random_score_set(rng);
    const hb::RocSummary rs = hb::roc(s);
    ASSERT_EQ(rs.auc, ts::oracle_auc(s.scores, s.is_member)) << "trial " << trial;
    for (double lvl : levels) {
      ASSERT_EQ(hb::tpr_at_fpr(rs, lvl).value, ts::oracle_tpr_at_fpr(s.scores, s.is_member, lvl))
          << "trial " << trial << " level " << lvl;
      ASSERT_EQ(hb::tnr_at_fnr(rs, lvl).value, ts::oracle_tnr_at_fnr(s.scores, s.is_member, lvl))
          << "trial " << trial << " level " << lvl;
    }
  }
}

TEST(Roc, CsvExportHasOneRowPerPoint) {
  const hb::RocSummary rs = hb::roc(score_set({0.9, 0.6}, {0.7, 0.2}));
  const fs::path dir = ts::test_tmpdir("roc_csv");
  const std::string path = (dir / "roc.csv").string();
  hb::save_roc_csv(rs, path);
  std::ifstream in(path);
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_EQ(line, "threshold,tp,fp,tn,fn,tpr,fpr,tnr,fnr");
  size_t rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, rs.points.size());
}

// ---------------------------------------------------------------------------
// Entropy gap
// ---------------------------------------------------------------------------

TEST(EntropyGap, UniformModelGivesMaxEntropyAndZeroGap) {
  const hb::Dataset ds = ts::tiny_synth(60, 6, 4, 0.3, 3);
  hb::MlpModel m;
  m.layer_dims = {6, 4};
  m.weights.push_back(hb::MatrixXd::Zero(4, 6));
  m.biases.push_back(hb::VectorXd::Zero(4));

  const std::vector<int> members = {0, 1, 2, 3, 4};
  const std::vector<int> nonmembers = {10, 11, 12};
  const hb::EntropyGapReport r = hb::entropy_gap(m, ds, members, nonmembers);
  EXPECT_NEAR(r.mean_member_entropy, std::log(4.0), 1e-12);
  EXPECT_NEAR(r.mean_nonmember_entropy, std::log(4.0), 1e-12);
  EXPECT_NEAR(r.difference, 0.0, 1e-12);

  EXPECT_THROW(hb::entropy_gap(m, ds, {}, nonmembers), hb::MetricError);
  EXPECT_THROW(hb::entropy_gap(m, ds, members, {}), hb::MetricError);
}

TEST(EntropyGap, AgreesWithPerSampleEntropyAverage) {
  const hb::Dataset ds = ts::tiny_synth(80, 6, 3, 0.3, 9);
  hb::Rng rng(5);
  const hb::MlpModel m = hb::MlpModel::init({6, 8, 3}, rng);
  const std::vector<int> members = {0, 5, 9, 14};
  const std::vector<int> nonmembers = {20, 30, 40};
  const hb::EntropyGapReport r = hb::entropy_gap(m, ds, members, nonmembers);

  auto mean_h = [&](const std::vector<int>& idx) {
    double sum = 0.0;
    for (int i : idx) sum += hb::entropy(hb::forward(m, ds.features.col(i)));
    return sum / static_cast<double>(idx.size());
  };
  EXPECT_NEAR(r.mean_member_entropy, mean_h(members), 1e-12);
  EXPECT_NEAR(r.mean_nonmember_entropy, mean_h(nonmembers), 1e-12);
  EXPECT_NEAR(r.difference, r.mean_nonmember_entropy - r.mean_member_entropy, 1e-15);
}

// ---------------------------------------------------------------------------
// Defense evaluation harness
// ---------------------------------------------------------------------------

namespace {

struct EvalFixture {
  hb::Dataset data;
  hb::ThreatModelSplit split;
  hb::DefendedModel model;
};

EvalFixture make_eval_fixture(bool gaussian) {
  EvalFixture f;
  hb::SynthConfig cfg;
  cfg.n = 240;
  cfg.d = 8;
  cfg.k = 3;
  cfg.flip_prob = 0.2;
  cfg.seed = 5;
  if (gaussian) cfg.mode = hb::SynthMode::kGaussian;
  f.data = hb::synthesize_dataset(cfg);
  f.split = hb::make_threat_split(f.data, 60, 5);
  hb::TrainConfig t;
  t.hidden_dims = {16};
  t.epochs = 5;
  t.batch_size = 16;
  t.seed = 2;
  auto [dm, report] = hb::train_undefended(t, f.data, f.split);
  f.model = std::move(dm);
  return f;
}

}  // namespace

TEST(EvaluateDefense, ProducesValidReportAndIsolatesFailedAttacks) {
  // Interval-domain data so the noise-boundary attack must fail cleanly while
  // the other attacks succeed.
  const EvalFixture f = make_eval_fixture(/*gaussian=*/true);
  hb::AttackSuiteConfig cfg;
  cfg.seed = 77;
  const std::vector<hb::AttackKind> attacks = {
      hb::AttackKind::kLoss, hb::AttackKind::kEntropy, hb::AttackKind::kBoundaryNoise};
  const hb::DefenseEvaluation ev =
      hb::evaluate_defense(f.model, f.data, f.split, attacks, {0.01, 0.1}, {0.01, 0.1}, cfg,
                           "undefended-test", "baseline-name", 0.5);

  ASSERT_EQ(ev.attacks.size(), 3u);
  EXPECT_TRUE(ev.attacks[0].ok);
  EXPECT_TRUE(ev.attacks[1].ok);
  EXPECT_FALSE(ev.attacks[2].ok);
  EXPECT_FALSE(ev.attacks[2].error.empty());
  EXPECT_GT(ev.attacks[0].target_queries, 0);

  EXPECT_NEAR(ev.accuracy_delta, ev.test_accuracy - 0.5, 1e-15);
  EXPECT_EQ(ev.baseline_name, "baseline-name");

  // Aggregates cover exactly the requested levels and dominate each attack.
  ASSERT_EQ(ev.max_tpr_at_fpr.size(), 2u);
  ASSERT_EQ(ev.max_tnr_at_fnr.size(), 2u);
  for (const auto& ae : ev.attacks) {
    if (!ae.ok) continue;
    EXPECT_LE(ae.auc, ev.max_auc);
    for (const auto& [lvl, r] : ae.tpr_at_fpr) EXPECT_LE(r.value, ev.max_tpr_at_fpr.at(lvl));
    for (const auto& [lvl, r] : ae.tnr_at_fnr) EXPECT_LE(r.value, ev.max_tnr_at_fnr.at(lvl));
  }

  const nlohmann::json j = hb::to_json(ev);
  EXPECT_NO_THROW(hb::validate_report_json(j));
  EXPECT_EQ(j["target"], "undefended-test");
  EXPECT_TRUE(j["per_attack"]["boundary_noise"].contains("error"));
  EXPECT_TRUE(j["per_attack"]["loss"]["auc"].is_number());
  // Levels 0.01 at these sample sizes are below resolution -> warnings emitted.
  EXPECT_TRUE(j["per_attack"]["loss"].contains("warnings"));
}

TEST(EvaluateDefense, ReportValidatorRejectsMalformedReports) {
  const EvalFixture f = make_eval_fixture(/*gaussian=*/false);
  hb::AttackSuiteConfig cfg;
  cfg.seed = 7;
  const hb::DefenseEvaluation ev = hb::evaluate_defense(
      f.model, f.data, f.split, {hb::AttackKind::kLoss}, {0.1}, {0.1}, cfg, "t");
  nlohmann::json good = hb::to_json(ev);
  ASSERT_NO_THROW(hb::validate_report_json(good));

  nlohmann::json bad = good;
  bad.erase("target");
  EXPECT_THROW(hb::validate_report_json(bad), hb::MetricError);

  bad = good;
  bad["accuracy"]["train"] = "high";
  EXPECT_THROW(hb::validate_report_json(bad), hb::MetricError);

  bad = good;
  bad["per_attack"]["loss"].erase("auc");
  EXPECT_THROW(hb::validate_report_json(bad), hb::MetricError);

  bad = good;
  bad.erase("max_over_attacks");
  EXPECT_THROW(hb::validate_report_json(bad), hb::MetricError);

  bad = good;
  bad["accuracy"].erase("delta");
  EXPECT_THROW(hb::validate_report_json(bad), hb::MetricError);
}
