// Evaluation harness: exact empirical ROC over membership scores, low-FPR /
// low-FNR readouts, AUC, the entropy-gap diagnostic, and the orchestrator
// that runs an attack suite against a defended model and emits a report.
//
// ROC convention: thresholds at every distinct score, rule "score >= tau =>
// member", tied scores move together (no interpolation). AUC is computed
// with an integer pair-count numerator, so it equals the Mann-Whitney
// statistic with ties at half weight exactly.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hampbench/attacks.hpp"
#include "hampbench/data.hpp"
#include "hampbench/defense.hpp"
#include "hampbench/errors.hpp"
#include "hampbench/mlp.hpp"
#include "hampbench/prob.hpp"

namespace hampbench {

struct RocPoint {
  double threshold = 0.0;
  long tp = 0, fp = 0, tn = 0, fn = 0;
  double tpr = 0.0, fpr = 0.0, tnr = 0.0, fnr = 0.0;
};

struct RocSummary {
  // Descending-threshold sweep; the leading point is the empty-acceptance
  // operating point (threshold above every score, tp = fp = 0).
  std::vector<RocPoint> points;
  double auc = 0.0;
  long num_members = 0;
  long num_nonmembers = 0;
};

inline RocSummary roc(const MembershipScoreSet& scores) {
  scores.validate();
  long p = 0, n = 0;
  for (bool m : scores.is_member) (m ? p : n) += 1;
  if (p == 0 || n == 0)
    throw MetricError("roc requires at least one member and one non-member score");

  // Group scores descending; tied scores enter atomically.
  std::vector<std::pair<double, bool>> rows(scores.scores.size());
  for (size_t i = 0; i < scores.scores.size(); ++i)
    rows[i] = {scores.scores[i], scores.is_member[i]};
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  RocSummary rs;
  rs.num_members = p;
  rs.num_nonmembers = n;

  RocPoint top;
  top.threshold = std::numeric_limits<double>::infinity();
  top.tn = n;
  top.fn = p;
  top.tnr = 1.0;
  top.fnr = 1.0;
  rs.points.push_back(top);

  long tp = 0, fp = 0;
  long long auc_numerator = 0;  // sum over segments of dFP * (tp_prev + tp_next)
  size_t i = 0;
  while (i < rows.size()) {
    const double tau = rows[i].first;
    long dtp = 0, dfp = 0;
    while (i < rows.size() && rows[i].first == tau) {
      (rows[i].second ? dtp : dfp) += 1;
      ++i;
    }
    const long tp_prev = tp;
    tp += dtp;
    fp += dfp;
    auc_numerator += static_cast<long long>(dfp) * (tp_prev + tp);

    RocPoint pt;
    pt.threshold = tau;
    pt.tp = tp;
    pt.fp = fp;
    pt.fn = p - tp;
    pt.tn = n - fp;
    pt.tpr = static_cast<double>(tp) / static_cast<double>(p);
    pt.fpr = static_cast<double>(fp) / static_cast<double>(n);
    pt.tnr = static_cast<double>(pt.tn) / static_cast<double>(n);
    pt.fnr = static_cast<double>(pt.fn) / static_cast<double>(p);
    rs.points.push_back(pt);
  }
  rs.auc = static_cast<double>(auc_numerator) /
           (2.0 * static_cast<double>(p) * static_cast<double>(n));
  return rs;
}

/// A low-tail readout plus a resolution flag: below_resolution marks levels
/// finer than one count (level < 1/n), where the empirical rate cannot
/// distinguish the level from zero.
struct RateReadout {
  double value = 0.0;
  bool below_resolution = false;
};

/// Max TPR over thresholds whose FPR stays at or below `level`
/// (rule: score >= tau => member).
inline RateReadout tpr_at_fpr(const RocSummary& rs, double level) {
  if (!(level > 0.0 && level < 1.0)) throw MetricError("fpr level must lie in (0,1)");
  RateReadout out;
  out.below_resolution = level < 1.0 / static_cast<double>(rs.num_nonmembers);
  for (const auto& pt : rs.points)
    if (static_cast<double>(pt.fp) <= level * static_cast<double>(rs.num_nonmembers))
      out.value = std::max(out.value, pt.tpr);
  return out;
}

/// Max TNR over thresholds whose FNR stays at or below `level`, classifying
/// on the low tail (rule: score <= tau => non-member). By the sweep's
/// construction tn/fn at threshold tau equal the counts of scores < next
/// distinct value, so the same points serve both directions.
inline RateReadout tnr_at_fnr(const RocSummary& rs, double level) {
  if (!(level > 0.0 && level < 1.0)) throw MetricError("fnr level must lie in (0,1)");
  RateReadout out;
  out.below_resolution = level < 1.0 / static_cast<double>(rs.num_members);
  for (const auto& pt : rs.points)
    if (static_cast<double>(pt.fn) <= level * static_cast<double>(rs.num_members))
      out.value = std::max(out.value, pt.tnr);
  return out;
}

inline void save_roc_csv(const RocSummary& rs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write roc file: " + path);
  out << "threshold,tp,fp,tn,fn,tpr,fpr,tnr,fnr\n";
  for (const auto& pt : rs.points) {
    out << detail::format_double(pt.threshold) << ',' << pt.tp << ',' << pt.fp << ',' << pt.tn
        << ',' << pt.fn << ',' << detail::format_double(pt.tpr) << ','
        << detail::format_double(pt.fpr) << ',' << detail::format_double(pt.tnr) << ','
        << detail::format_double(pt.fnr) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Entropy gap
// ---------------------------------------------------------------------------

/// Mean prediction entropy over members and non-members, measured on raw
/// (pre-modification) outputs: post-modification entropies describe the
/// random pool, not the model.
struct EntropyGapReport {
  double mean_member_entropy = 0.0;
  double mean_nonmember_entropy = 0.0;
  double difference = 0.0;  // nonmember - member; positive when members are
                            // the more confident set
};

inline EntropyGapReport entropy_gap(const MlpModel& model, const Dataset& data,
                                    const std::vector<int>& member_idx,
                                    const std::vector<int>& nonmember_idx) {
  if (member_idx.empty() || nonmember_idx.empty())
    throw MetricError("entropy_gap requires non-empty member and non-member sets");
  const double max_h = std::log(static_cast<double>(data.k));
  auto mean_entropy = [&](const std::vector<int>& idx) {
    const MatrixXd probs = forward_probs_batch(model, gather_columns(data.features, idx));
    double sum = 0.0;
    for (long c = 0; c < probs.cols(); ++c) {
      double h = 0.0;
      for (long r = 0; r < probs.rows(); ++r)
        if (probs(r, c) > 0.0) h -= probs(r, c) * std::log(probs(r, c));
      if (h < 0.0 || h > max_h + 1e-9)
        throw MetricError("entropy outside [0, ln k]; outputs are not a distribution");
      sum += h;
    }
    return sum / static_cast<double>(probs.cols());
  };
  EntropyGapReport r;
  r.mean_member_entropy = mean_entropy(member_idx);
  r.mean_nonmember_entropy = mean_entropy(nonmember_idx);
  r.difference = r.mean_nonmember_entropy - r.mean_member_entropy;
  return r;
}

// ---------------------------------------------------------------------------
// Defense evaluation
// ---------------------------------------------------------------------------

struct AttackEvaluation {
  std::string attack_name;
  bool ok = false;
  std::string error;  // set when ok is false
  double auc = 0.0;
  std::map<double, RateReadout> tpr_at_fpr;
  std::map<double, RateReadout> tnr_at_fnr;
  long target_queries = 0;
};

struct DefenseEvaluation {
  std::string target_name;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  // test accuracy minus the named baseline's; NaN when no baseline given.
  double accuracy_delta = std::numeric_limits<double>::quiet_NaN();
  std::string baseline_name;
  EntropyGapReport entropy_gap;
  std::vector<AttackEvaluation> attacks;
  double max_auc = 0.0;
  std::map<double, double> max_tpr_at_fpr;
  std::map<double, double> max_tnr_at_fnr;
};

/// Runs every requested attack against the target (each isolated: one
/// failing attack is reported in place, not propagated), computes the ROC
/// readouts at the requested levels, and aggregates the max over attacks.
inline DefenseEvaluation evaluate_defense(
    const DefendedModel& target, const Dataset& data, const ThreatModelSplit& split,
    const std::vector<AttackKind>& attack_list, const std::vector<double>& fpr_levels,
    const std::vector<double>& fnr_levels, const AttackSuiteConfig& cfg,
    const std::string& target_name, const std::string& baseline_name = "",
    double baseline_test_accuracy = std::numeric_limits<double>::quiet_NaN()) {
  DefenseEvaluation ev;
  ev.target_name = target_name;
  ev.baseline_name = baseline_name;
  ev.train_accuracy = accuracy(target.model, data, split.train_idx);
  ev.test_accuracy = accuracy(target.model, data, split.test_idx);
  if (std::isfinite(baseline_test_accuracy))
    ev.accuracy_delta = ev.test_accuracy - baseline_test_accuracy;
  ev.entropy_gap = entropy_gap(target.model, data, split.eval_member_idx,
                               split.eval_nonmember_idx);

  for (double lvl : fpr_levels) ev.max_tpr_at_fpr[lvl] = 0.0;
  for (double lvl : fnr_levels) ev.max_tnr_at_fnr[lvl] = 0.0;

  for (AttackKind kind : attack_list) {
    AttackEvaluation ae;
    ae.attack_name = to_string(kind);
    try {
      const AttackRunResult run = run_attack(kind, target, data, split, cfg);
      ae.target_queries = run.target_queries;
      const RocSummary rs = roc(run.scores);
      ae.auc = rs.auc;
      for (double lvl : fpr_levels) ae.tpr_at_fpr[lvl] = tpr_at_fpr(rs, lvl);
      for (double lvl : fnr_levels) ae.tnr_at_fnr[lvl] = tnr_at_fnr(rs, lvl);
      ae.ok = true;
    } catch (const Error& e) {
      ae.ok = false;
      ae.error = e.what();
    }
    if (ae.ok) {
      ev.max_auc = std::max(ev.max_auc, ae.auc);
      for (const auto& [lvl, r] : ae.tpr_at_fpr)
        ev.max_tpr_at_fpr[lvl] = std::max(ev.max_tpr_at_fpr[lvl], r.value);
      for (const auto& [lvl, r] : ae.tnr_at_fnr)
        ev.max_tnr_at_fnr[lvl] = std::max(ev.max_tnr_at_fnr[lvl], r.value);
    }
    ev.attacks.push_back(std::move(ae));
  }
  return ev;
}

namespace detail {

inline std::string level_key(double level) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", level);
  return buf;
}

}  // namespace detail

/// Report shape: {target, accuracy:{train,test,delta}, per_attack:{name:
/// {auc, tpr_at_fpr:{level:value}, tnr_at_fnr:{level:value}}},
/// max_over_attacks:{...}} plus the entropy-gap block and per-attack
/// warnings for levels below resolution.
inline nlohmann::json to_json(const DefenseEvaluation& ev) {
  nlohmann::json j;
  j["target"] = ev.target_name;
  j["accuracy"]["train"] = ev.train_accuracy;
  j["accuracy"]["test"] = ev.test_accuracy;
  j["accuracy"]["delta"] = ev.accuracy_delta;  // NaN serializes as null
  if (!ev.baseline_name.empty()) j["accuracy"]["baseline"] = ev.baseline_name;
  j["entropy_gap"]["member"] = ev.entropy_gap.mean_member_entropy;
  j["entropy_gap"]["nonmember"] = ev.entropy_gap.mean_nonmember_entropy;
  j["entropy_gap"]["difference"] = ev.entropy_gap.difference;

  j["per_attack"] = nlohmann::json::object();
  for (const auto& ae : ev.attacks) {
    nlohmann::json aj;
    if (!ae.ok) {
      aj["error"] = ae.error;
    } else {
      aj["auc"] = ae.auc;
      aj["target_queries"] = ae.target_queries;
      nlohmann::json warnings = nlohmann::json::array();
      aj["tpr_at_fpr"] = nlohmann::json::object();
      for (const auto& [lvl, r] : ae.tpr_at_fpr) {
        aj["tpr_at_fpr"][detail::level_key(lvl)] = r.value;
        if (r.below_resolution)
          warnings.push_back("fpr level " + detail::level_key(lvl) +
                             " is below the non-member count resolution");
      }
      aj["tnr_at_fnr"] = nlohmann::json::object();
      for (const auto& [lvl, r] : ae.tnr_at_fnr) {
        aj["tnr_at_fnr"][detail::level_key(lvl)] = r.value;
        if (r.below_resolution)
          warnings.push_back("fnr level " + detail::level_key(lvl) +
                             " is below the member count resolution");
      }
      if (!warnings.empty()) aj["warnings"] = warnings;
    }
    j["per_attack"][ae.attack_name] = aj;
  }

  j["max_over_attacks"]["auc"] = ev.max_auc;
  j["max_over_attacks"]["tpr_at_fpr"] = nlohmann::json::object();
  for (const auto& [lvl, v] : ev.max_tpr_at_fpr)
    j["max_over_attacks"]["tpr_at_fpr"][detail::level_key(lvl)] = v;
  j["max_over_attacks"]["tnr_at_fnr"] = nlohmann::json::object();
  for (const auto& [lvl, v] : ev.max_tnr_at_fnr)
    j["max_over_attacks"]["tnr_at_fnr"][detail::level_key(lvl)] = v;
  return j;
}

/// Structural validation of a report against the published schema
/// (docs/report-schema.json): required keys present with the right types.
/// Throws MetricError on the first violation.
inline void validate_report_json(const nlohmann::json& j) {
  auto require = [](bool cond, const std::string& what) {
    if (!cond) throw MetricError("report schema violation: " + what);
  };
  require(j.is_object(), "report must be an object");
  require(j.contains("target") && j["target"].is_string(), "target must be a string");
  require(j.contains("accuracy") && j["accuracy"].is_object(), "accuracy must be an object");
  for (const char* key : {"train", "test"})
    require(j["accuracy"].contains(key) &&
                (j["accuracy"][key].is_number() || j["accuracy"][key].is_null()),
            std::string("accuracy.") + key + " must be a number or null");
  require(j["accuracy"].contains("delta"), "accuracy.delta must be present");
  require(j.contains("per_attack") && j["per_attack"].is_object(),
          "per_attack must be an object");
  for (const auto& [name, aj] : j["per_attack"].items()) {
    require(aj.is_object(), "per_attack entries must be objects");
    if (aj.contains("error")) continue;  // failed attacks carry only an error
    require(aj.contains("auc") && aj["auc"].is_number(), name + ".auc must be a number");
    for (const char* key : {"tpr_at_fpr", "tnr_at_fnr"}) {
      require(aj.contains(key) && aj[key].is_object(),
              name + "." + key + " must be an object");
      for (const auto& [lvl, v] : aj[key].items())
        require(v.is_number(), name + "." + key + "." + lvl + " must be a number");
    }
  }
  require(j.contains("max_over_attacks") && j["max_over_attacks"].is_object(),
          "max_over_attacks must be an object");
  require(j["max_over_attacks"].contains("auc") && j["max_over_attacks"]["auc"].is_number(),
          "max_over_attacks.auc must be a number");
  for (const char* key : {"tpr_at_fpr", "tnr_at_fnr"})
    require(j["max_over_attacks"].contains(key) && j["max_over_attacks"][key].is_object(),
            std::string("max_over_attacks.") + key + " must be an object");
}

}  // namespace hampbench
