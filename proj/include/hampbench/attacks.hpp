// Membership-inference attacks. Every attack sees the target only through
// TargetOracle — a query-counting black-box handle over predict_defended —
// and emits real-valued scores (higher = more member-like). Thresholds are
// swept later by the metrics module, so fixed-threshold attack variants are
// recovered as operating points on the same curves.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hampbench/data.hpp"
#include "hampbench/defense.hpp"
#include "hampbench/errors.hpp"
#include "hampbench/labels.hpp"
#include "hampbench/mlp.hpp"
#include "hampbench/prob.hpp"
#include "hampbench/random.hpp"

namespace hampbench {

// ---------------------------------------------------------------------------
// Black-box access
// ---------------------------------------------------------------------------

/// Query budget accounting; safe to increment from concurrent scorers.
struct AttackQueryLog {
  std::atomic<long> queries{0};

  long count() const { return queries.load(); }
};

/// The only route from an attack to the target model. Exposes defended
/// outputs and predicted labels; weights and raw logits are unreachable.
class TargetOracle {
 public:
  TargetOracle(const DefendedModel& dm, uint64_t query_stream_seed)
      : dm_(&dm), rng_(Rng::for_stream(query_stream_seed, /*stream=*/0x6f7263)) {}

  ProbabilityVector query(const VectorXd& x) {
    log_.queries.fetch_add(1);
    return predict_defended(*dm_, x, rng_);
  }

  int query_label(const VectorXd& x) { return query(x).argmax(); }

  int num_classes() const { return dm_->model.output_dim(); }
  const InputDomain& domain() const { return dm_->domain; }
  long query_count() const { return log_.count(); }

 private:
  const DefendedModel* dm_;
  Rng rng_;
  AttackQueryLog log_;
};

// ---------------------------------------------------------------------------
// Score definitions
// ---------------------------------------------------------------------------

/// -CE = ln(F(x)_y), clamped; 0 is the maximal (most member-like) value.
inline double score_loss(const ProbabilityVector& output, int y) {
  if (y < 0 || y >= output.size()) throw AttackError("label out of range in score_loss");
  return std::log(std::max(output[y], kLogEps));
}

/// Ground-truth-class confidence F(x)_y.
inline double score_confidence(const ProbabilityVector& output, int y) {
  if (y < 0 || y >= output.size()) throw AttackError("label out of range in score_confidence");
  return output[y];
}

/// Negated prediction entropy: confident (peaked) outputs score high.
inline double score_entropy(const ProbabilityVector& output) { return -entropy(output); }

/// Negated modified entropy: -[ -(1-F_y) ln F_y - sum_{j!=y} F_j ln(1-F_j) ].
/// Unlike plain entropy it distinguishes confidently-right from
/// confidently-wrong via the ground-truth label.
inline double score_modified_entropy(const ProbabilityVector& output, int y) {
  if (y < 0 || y >= output.size())
    throw AttackError("label out of range in score_modified_entropy");
  double m = 0.0;
  const double fy = output[y];
  m -= (1.0 - fy) * std::log(std::max(fy, kLogEps));
  for (int j = 0; j < output.size(); ++j) {
    if (j == y) continue;
    m -= output[j] * std::log(std::max(1.0 - output[j], kLogEps));
  }
  return -m;
}

/// 1 when the prediction is correct (argmax ties resolve to lowest index).
inline double score_correctness(const ProbabilityVector& output, int y) {
  if (y < 0 || y >= output.size()) throw AttackError("label out of range in score_correctness");
  return output.argmax() == y ? 1.0 : 0.0;
}

/// Empirical attack gain: mean h over members plus mean (1-h) over
/// non-members; 2 for a perfect attack, 1 for an uninformative one.
inline double mia_gain(const std::vector<double>& h_member,
                       const std::vector<double>& h_nonmember) {
  if (h_member.empty() || h_nonmember.empty())
    throw AttackError("mia_gain needs scores for both members and non-members");
  double sm = 0.0, sn = 0.0;
  for (double h : h_member) {
    if (h < 0.0 || h > 1.0) throw AttackError("mia_gain requires h in [0,1]");
    sm += h;
  }
  for (double h : h_nonmember) {
    if (h < 0.0 || h > 1.0) throw AttackError("mia_gain requires h in [0,1]");
    sn += 1.0 - h;
  }
  return sm / static_cast<double>(h_member.size()) + sn / static_cast<double>(h_nonmember.size());
}

// ---------------------------------------------------------------------------
// Score sets
// ---------------------------------------------------------------------------

/// Per-sample membership scores over the evaluation sets. The ground-truth
/// flags ride along for the metrics module only; no attack logic reads them.
struct MembershipScoreSet {
  std::string attack_name;
  std::vector<int> sample_ids;
  std::vector<double> scores;
  std::vector<bool> is_member;

  void validate() const {
    if (scores.size() != is_member.size() || scores.size() != sample_ids.size())
      throw AttackError("score set fields have mismatched lengths");
    if (scores.empty()) throw AttackError("score set is empty");
    for (double s : scores)
      if (!std::isfinite(s)) throw AttackError("score set contains a non-finite score");
  }
};

inline void save_scores_csv(const MembershipScoreSet& s, const std::string& path) {
  s.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write score file: " + path);
  out << "sample_id,score,is_member\n";
  for (size_t i = 0; i < s.scores.size(); ++i) {
    out << s.sample_ids[i] << ',' << detail::format_double(s.scores[i]) << ','
        << (s.is_member[i] ? 1 : 0) << '\n';
  }
}

inline MembershipScoreSet load_scores_csv(const std::string& path,
                                          const std::string& attack_name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open score file: " + path);
  MembershipScoreSet s;
  s.attack_name = attack_name;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto toks = detail::split_csv_line(line);
    if (line_no == 1 && !toks.empty() && toks[0] == "sample_id") continue;
    if (toks.size() != 3)
      throw DataError("score file line " + std::to_string(line_no) + ": expected 3 columns");
    int id, member;
    double score;
    if (!detail::parse_int(toks[0], id) || !detail::parse_double(toks[1], score) ||
        !detail::parse_int(toks[2], member) || (member != 0 && member != 1))
      throw DataError("score file line " + std::to_string(line_no) + ": cannot parse row");
    s.sample_ids.push_back(id);
    s.scores.push_back(score);
    s.is_member.push_back(member == 1);
  }
  s.validate();
  return s;
}

inline nlohmann::json to_json(const MembershipScoreSet& s) {
  nlohmann::json j;
  j["attack_name"] = s.attack_name;
  j["sample_ids"] = s.sample_ids;
  j["scores"] = s.scores;
  j["is_member"] = nlohmann::json::array();
  for (bool b : s.is_member) j["is_member"].push_back(b);
  return j;
}

namespace detail {

/// Assembles a score set by running one scorer over both eval sets; the
/// scorer sees only the sample index, never the membership flag.
template <typename ScoreFn>
inline MembershipScoreSet score_eval_sets(const std::string& name,
                                          const ThreatModelSplit& split, ScoreFn&& fn) {
  MembershipScoreSet out;
  out.attack_name = name;
  for (int i : split.eval_member_idx) {
    out.sample_ids.push_back(i);
    out.scores.push_back(fn(i));
    out.is_member.push_back(true);
  }
  for (int i : split.eval_nonmember_idx) {
    out.sample_ids.push_back(i);
    out.scores.push_back(fn(i));
    out.is_member.push_back(false);
  }
  out.validate();
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Metric attacks (loss / confidence / entropy / correctness)
// ---------------------------------------------------------------------------

inline MembershipScoreSet attack_loss(TargetOracle& target, const Dataset& data,
                                      const ThreatModelSplit& split) {
  return detail::score_eval_sets("loss", split, [&](int i) {
    return score_loss(target.query(data.features.col(i)), data.labels[static_cast<size_t>(i)]);
  });
}

inline MembershipScoreSet attack_confidence(TargetOracle& target, const Dataset& data,
                                            const ThreatModelSplit& split) {
  return detail::score_eval_sets("confidence", split, [&](int i) {
    return score_confidence(target.query(data.features.col(i)),
                            data.labels[static_cast<size_t>(i)]);
  });
}

inline MembershipScoreSet attack_entropy(TargetOracle& target, const Dataset& data,
                                         const ThreatModelSplit& split) {
  return detail::score_eval_sets("entropy", split, [&](int i) {
    return score_entropy(target.query(data.features.col(i)));
  });
}

inline MembershipScoreSet attack_correctness(TargetOracle& target, const Dataset& data,
                                             const ThreatModelSplit& split) {
  return detail::score_eval_sets("correctness", split, [&](int i) {
    return score_correctness(target.query(data.features.col(i)),
                             data.labels[static_cast<size_t>(i)]);
  });
}

/// Modified-entropy with class-dependent calibration: each raw score is
/// rank-normalized against the adversary-known non-members of its own class
/// (empirical CDF, ties at half weight) before the global threshold sweep.
/// Classes the adversary has no non-members for fall back to the pooled CDF.
inline MembershipScoreSet attack_modified_entropy(TargetOracle& target, const Dataset& data,
                                                  const ThreatModelSplit& split) {
  std::map<int, std::vector<double>> by_class;
  std::vector<double> pooled;
  for (int i : split.adv_nonmember_idx) {
    const int y = data.labels[static_cast<size_t>(i)];
    const double raw = score_modified_entropy(target.query(data.features.col(i)), y);
    by_class[y].push_back(raw);
    pooled.push_back(raw);
  }
  for (auto& [cls, v] : by_class) std::sort(v.begin(), v.end());
  std::sort(pooled.begin(), pooled.end());

  auto ecdf_rank = [](const std::vector<double>& sorted, double x) {
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), x);
    const auto hi = std::upper_bound(sorted.begin(), sorted.end(), x);
    const double less = static_cast<double>(lo - sorted.begin());
    const double equal = static_cast<double>(hi - lo);
    return (less + 0.5 * equal) / static_cast<double>(sorted.size());
  };

  return detail::score_eval_sets("modified_entropy", split, [&](int i) {
    const int y = data.labels[static_cast<size_t>(i)];
    const double raw = score_modified_entropy(target.query(data.features.col(i)), y);
    const auto it = by_class.find(y);
    const std::vector<double>& ref = (it != by_class.end() && !it->second.empty())
                                         ? it->second
                                         : pooled;
    if (ref.empty()) throw AttackError("no adversary non-members available for calibration");
    return ecdf_rank(ref, raw);
  });
}

// ---------------------------------------------------------------------------
// Attack-model training (shared by the NN and augmentation attacks)
// ---------------------------------------------------------------------------

struct NnAttackConfig {
  std::vector<int> hidden_dims = {128, 64};
  int epochs = 40;
  int batch_size = 32;
  OptimizerConfig optimizer;
  uint64_t seed = 1;
};

namespace detail {

/// Binary membership classifier over arbitrary feature vectors. Trains on
/// the adversary-known sets; throws when the problem is degenerate.
inline MlpModel train_attack_model(const MatrixXd& feats, const std::vector<int>& labels,
                                   const NnAttackConfig& cfg) {
  const int n = static_cast<int>(feats.cols());
  if (n != static_cast<int>(labels.size()))
    throw AttackError("attack training features and labels disagree in length");
  bool saw0 = false, saw1 = false;
  for (int l : labels) (l == 0 ? saw0 : saw1) = true;
  if (!saw0 || !saw1)
    throw AttackError("attack training set is single-class; cannot fit a membership model");
  bool all_same = true;
  for (int c = 1; c < n && all_same; ++c)
    if ((feats.col(c).array() != feats.col(0).array()).any()) all_same = false;
  if (all_same)
    throw AttackError("attack features are constant across the adversary sets (degenerate)");

  std::vector<int> dims;
  dims.push_back(static_cast<int>(feats.rows()));
  for (int h : cfg.hidden_dims) dims.push_back(h);
  dims.push_back(2);

  Rng init_rng = Rng::for_stream(cfg.seed, /*stream=*/0x61696e69);     // attack init
  Rng shuffle_rng = Rng::for_stream(cfg.seed, /*stream=*/0x61736866);  // attack shuffle
  MlpModel model = MlpModel::init(dims, init_rng);
  SgdState state = SgdState::zero_like(model);
  const MatrixXd y = one_hot_matrix(labels, 2);

  std::vector<int> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    SgdConfig step{cfg.optimizer.lr_at_epoch(epoch, cfg.epochs), cfg.optimizer.momentum,
                   cfg.optimizer.weight_decay};
    shuffle_rng.shuffle(order);
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int bsz = std::min(cfg.batch_size, n - start);
      MatrixXd bx(feats.rows(), bsz);
      MatrixXd by(2, bsz);
      for (int b = 0; b < bsz; ++b) {
        const int src = order[static_cast<size_t>(start + b)];
        bx.col(b) = feats.col(src);
        by.col(b) = y.col(src);
      }
      double objective = 0.0;
      const GradientSet g = hamp_gradient(model, bx, by, /*alpha=*/0.0, &objective);
      if (!std::isfinite(objective))
        throw AttackError("attack model diverged at epoch " + std::to_string(epoch + 1));
      sgd_step(model, g, state, step);
    }
  }
  return model;
}

/// Member probability (class-1 softmax output) of a trained attack model.
inline double attack_model_score(const MlpModel& m, const VectorXd& features) {
  return softmax(forward_logits(m, features))[1];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// NN attack
// ---------------------------------------------------------------------------

namespace detail {

/// 2k+1 features: logit-scaled output scores sorted descending, the
/// cross-entropy loss, and the one-hot ground-truth label.
inline VectorXd nn_attack_features(const ProbabilityVector& output, int y) {
  const int k = output.size();
  VectorXd f(2 * k + 1);
  std::vector<double> ls(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j) ls[static_cast<size_t>(j)] = logit_scale(output[j]);
  std::sort(ls.begin(), ls.end(), std::greater<double>());
  for (int j = 0; j < k; ++j) f[j] = ls[static_cast<size_t>(j)];
  f[k] = -score_loss(output, y);
  for (int j = 0; j < k; ++j) f[k + 1 + j] = (j == y) ? 1.0 : 0.0;
  return f;
}

}  // namespace detail

/// Trains a small MLP on (defended output, loss, label) features of the
/// adversary-known member/non-member sets, then scores the eval sets with
/// its member probability.
inline MembershipScoreSet attack_nn(TargetOracle& target, const Dataset& data,
                                    const ThreatModelSplit& split, const NnAttackConfig& cfg) {
  const int k = target.num_classes();
  auto features_of = [&](int i) {
    return detail::nn_attack_features(target.query(data.features.col(i)),
                                      data.labels[static_cast<size_t>(i)]);
  };

  const long n_adv =
      static_cast<long>(split.adv_member_idx.size() + split.adv_nonmember_idx.size());
  MatrixXd feats(2 * k + 1, n_adv);
  std::vector<int> labels;
  labels.reserve(static_cast<size_t>(n_adv));
  long col = 0;
  for (int i : split.adv_member_idx) {
    feats.col(col++) = features_of(i);
    labels.push_back(1);
  }
  for (int i : split.adv_nonmember_idx) {
    feats.col(col++) = features_of(i);
    labels.push_back(0);
  }

  const MlpModel attack_model = detail::train_attack_model(feats, labels, cfg);
  return detail::score_eval_sets("nn", split, [&](int i) {
    return detail::attack_model_score(attack_model, features_of(i));
  });
}

// ---------------------------------------------------------------------------
// LiRA
// ---------------------------------------------------------------------------

/// How to train a model "the same way as the target" — shadow models follow
/// the full recipe including soft labels, regularizer, and output
/// modification when the target is HAMP-defended.
struct DefenseRecipe {
  DefenseKind kind = DefenseKind::kUndefended;
  TrainConfig train;
  double gamma = 0.0;
  double alpha = 0.0;
  bool output_modification = true;  // HAMP only
  double ls_intensity = 0.0;        // label smoothing only
  int early_stop_epoch = 0;         // early stopping only

  std::pair<DefendedModel, TrainReport> train_model(const Dataset& data,
                                                    const ThreatModelSplit& split,
                                                    uint64_t seed) const {
    TrainConfig t = train;
    t.seed = seed;
    t.track_train_metrics = false;
    switch (kind) {
      case DefenseKind::kHamp: {
        HampConfig h;
        h.train = t;
        h.gamma = gamma;
        h.alpha = alpha;
        h.output_modification = output_modification;
        return train_hamp(h, data, split);
      }
      case DefenseKind::kUndefended:
        return train_undefended(t, data, split);
      case DefenseKind::kLabelSmoothing:
        return train_baseline_ls(ls_intensity, t, data, split);
      case DefenseKind::kEarlyStop: {
        if (early_stop_epoch < 1 || early_stop_epoch > t.epochs)
          throw ConfigError("early_stop_epoch outside [1, epochs]");
        // Cut the full trajectory at the requested epoch rather than training
        // a shortened run: the learning-rate schedule depends on total epochs,
        // so only the trajectory cut reproduces the target's procedure.
        auto cuts = early_stop_checkpoints(t, data, split, {early_stop_epoch});
        return std::move(cuts.front());
      }
    }
    throw ConfigError("unknown defense kind in recipe");
  }
};

enum class LiraVarianceMode { kGlobal, kPerSample };

struct LiraConfig {
  int num_shadows = 16;
  LiraVarianceMode variance_mode = LiraVarianceMode::kGlobal;
  uint64_t seed = 1;
  DefenseRecipe recipe;
  std::string shadow_dir;  // when set, checkpoints + manifest are persisted
};

/// Per-sample IN/OUT assignment across N shadow models, derived from
/// (seed, sample id) and rebalanced so every sample has at least two IN and
/// two OUT shadows.
struct ShadowAssignment {
  std::vector<int> sample_ids;                 // the shadow universe, sorted
  std::vector<std::vector<uint8_t>> in_flags;  // [sample][shadow] in {0,1}
};

inline ShadowAssignment assign_shadows(const std::vector<int>& universe, int num_shadows,
                                       uint64_t seed) {
  if (num_shadows < 4)
    throw AttackError("cannot give every sample at least 2 IN and 2 OUT shadows with N=" +
                      std::to_string(num_shadows));
  ShadowAssignment a;
  a.sample_ids = universe;
  std::sort(a.sample_ids.begin(), a.sample_ids.end());
  a.in_flags.resize(a.sample_ids.size());
  for (size_t s = 0; s < a.sample_ids.size(); ++s) {
    Rng coin = Rng::for_stream(hash_combine(seed, static_cast<uint64_t>(a.sample_ids[s])),
                               /*stream=*/0x636f696e);  // "coin"
    auto& flags = a.in_flags[s];
    flags.resize(static_cast<size_t>(num_shadows));
    int in_count = 0;
    for (int j = 0; j < num_shadows; ++j) {
      flags[static_cast<size_t>(j)] = coin.next_bool() ? 1 : 0;
      in_count += flags[static_cast<size_t>(j)];
    }
    for (int j = 0; in_count < 2 && j < num_shadows; ++j)
      if (!flags[static_cast<size_t>(j)]) {
        flags[static_cast<size_t>(j)] = 1;
        ++in_count;
      }
    for (int j = 0; num_shadows - in_count < 2 && j < num_shadows; ++j)
      if (flags[static_cast<size_t>(j)]) {
        flags[static_cast<size_t>(j)] = 0;
        --in_count;
      }
    if (in_count < 2 || num_shadows - in_count < 2)
      throw AttackError("sample " + std::to_string(a.sample_ids[s]) +
                        " has fewer than 2 IN or 2 OUT shadows");
  }
  return a;
}

/// Closed-form Gaussian log-density ratio log N(phi; mu_in, var_in) -
/// log N(phi; mu_out, var_out); the shared -0.5 ln(2 pi) terms cancel.
inline double lira_log_ratio(double phi, double mu_in, double var_in, double mu_out,
                             double var_out) {
  if (!(var_in > 0.0) || !(var_out > 0.0))
    throw AttackError("lira_log_ratio requires positive variances");
  const double log_in = -0.5 * std::log(var_in) - (phi - mu_in) * (phi - mu_in) / (2.0 * var_in);
  const double log_out =
      -0.5 * std::log(var_out) - (phi - mu_out) * (phi - mu_out) / (2.0 * var_out);
  return log_in - log_out;
}

/// Per-sample likelihood-ratio attack: N shadow models trained by the
/// target's own recipe, logit-scaled ground-truth confidences collected
/// under IN and OUT shadows, Gaussians fitted, and the observed target
/// confidence scored by the log-density ratio.
inline MembershipScoreSet attack_lira(TargetOracle& target, const Dataset& data,
                                      const ThreatModelSplit& split, const LiraConfig& cfg) {
  if (cfg.num_shadows < 8 || cfg.num_shadows % 2 != 0)
    throw ConfigError("lira requires an even shadow count of at least 8");

  // Shadow universe: every sample whose membership the game involves.
  std::vector<int> universe;
  universe.insert(universe.end(), split.adv_member_idx.begin(), split.adv_member_idx.end());
  universe.insert(universe.end(), split.adv_nonmember_idx.begin(),
                  split.adv_nonmember_idx.end());
  universe.insert(universe.end(), split.eval_member_idx.begin(), split.eval_member_idx.end());
  universe.insert(universe.end(), split.eval_nonmember_idx.begin(),
                  split.eval_nonmember_idx.end());
  const ShadowAssignment assignment = assign_shadows(universe, cfg.num_shadows, cfg.seed);

  std::map<int, size_t> universe_pos;
  for (size_t s = 0; s < assignment.sample_ids.size(); ++s)
    universe_pos[assignment.sample_ids[s]] = s;

  const bool persist = !cfg.shadow_dir.empty();
  if (persist) std::filesystem::create_directories(cfg.shadow_dir);

  // phi[sample][shadow]: logit-scaled ground-truth-class confidence under
  // each shadow's defended prediction path.
  const size_t n_universe = assignment.sample_ids.size();
  std::vector<std::vector<double>> phi(n_universe,
                                       std::vector<double>(static_cast<size_t>(cfg.num_shadows)));

  for (int j = 0; j < cfg.num_shadows; ++j) {
    std::vector<int> in_ids, out_ids;
    for (size_t s = 0; s < n_universe; ++s)
      (assignment.in_flags[s][static_cast<size_t>(j)] ? in_ids : out_ids)
          .push_back(assignment.sample_ids[s]);
    if (in_ids.empty() || out_ids.size() < 2)
      throw AttackError("shadow " + std::to_string(j) + " has a degenerate IN/OUT division");

    ThreatModelSplit shadow_split;
    shadow_split.train_idx = in_ids;
    const int n_val =
        std::min<int>(std::max<int>(1, static_cast<int>(in_ids.size()) / 10),
                      static_cast<int>(out_ids.size()) - 1);
    shadow_split.val_idx.assign(out_ids.begin(), out_ids.begin() + n_val);
    shadow_split.test_idx.assign(out_ids.begin() + n_val, out_ids.end());

    auto [shadow, report] = cfg.recipe.train_model(
        data, shadow_split, hash_combine(cfg.seed, 0x73686400ULL + static_cast<uint64_t>(j)));

    Rng query_rng = Rng::for_stream(cfg.seed, 0x71727900ULL + static_cast<uint64_t>(j));
    for (size_t s = 0; s < n_universe; ++s) {
      const int id = assignment.sample_ids[s];
      const ProbabilityVector out = predict_defended(shadow, data.features.col(id), query_rng);
      phi[s][static_cast<size_t>(j)] = logit_scale(out[data.labels[static_cast<size_t>(id)]]);
    }

    if (persist) {
      char name[32];
      std::snprintf(name, sizeof(name), "shadow_%03d.ckpt", j);
      save_checkpoint(shadow, (std::filesystem::path(cfg.shadow_dir) / name).string());
    }
  }

  if (persist) {
    nlohmann::json manifest;
    manifest["num_shadows"] = cfg.num_shadows;
    manifest["seed"] = cfg.seed;
    manifest["variance_mode"] =
        cfg.variance_mode == LiraVarianceMode::kGlobal ? "global" : "per_sample";
    nlohmann::json assignments = nlohmann::json::object();
    for (size_t s = 0; s < n_universe; ++s) {
      std::string bits(static_cast<size_t>(cfg.num_shadows), '0');
      for (int j = 0; j < cfg.num_shadows; ++j)
        if (assignment.in_flags[s][static_cast<size_t>(j)]) bits[static_cast<size_t>(j)] = '1';
      assignments[std::to_string(assignment.sample_ids[s])] = bits;
    }
    manifest["assignments"] = assignments;
    std::ofstream mf(std::filesystem::path(cfg.shadow_dir) / "manifest.json",
                     std::ios::binary);
    if (!mf) throw DataError("cannot write shadow manifest under " + cfg.shadow_dir);
    mf << manifest.dump(2) << '\n';
  }

  // Per-sample Gaussian fits over the eval sets.
  struct Fit {
    double mu_in, mu_out, var_in, var_out;
    int n_in, n_out;
  };
  constexpr double kMinVariance = 1e-8;

  auto fit_of = [&](int id) {
    const size_t s = universe_pos.at(id);
    double sum_in = 0.0, sum_out = 0.0;
    int n_in = 0, n_out = 0;
    for (int j = 0; j < cfg.num_shadows; ++j) {
      if (assignment.in_flags[s][static_cast<size_t>(j)]) {
        sum_in += phi[s][static_cast<size_t>(j)];
        ++n_in;
      } else {
        sum_out += phi[s][static_cast<size_t>(j)];
        ++n_out;
      }
    }
    Fit f;
    f.n_in = n_in;
    f.n_out = n_out;
    f.mu_in = sum_in / n_in;
    f.mu_out = sum_out / n_out;
    double ss_in = 0.0, ss_out = 0.0;
    for (int j = 0; j < cfg.num_shadows; ++j) {
      const double v = phi[s][static_cast<size_t>(j)];
      if (assignment.in_flags[s][static_cast<size_t>(j)])
        ss_in += (v - f.mu_in) * (v - f.mu_in);
      else
        ss_out += (v - f.mu_out) * (v - f.mu_out);
    }
    f.var_in = ss_in / (n_in - 1);
    f.var_out = ss_out / (n_out - 1);
    return f;
  };

  std::vector<int> eval_ids;
  eval_ids.insert(eval_ids.end(), split.eval_member_idx.begin(), split.eval_member_idx.end());
  eval_ids.insert(eval_ids.end(), split.eval_nonmember_idx.begin(),
                  split.eval_nonmember_idx.end());
  std::map<int, Fit> fits;
  for (int id : eval_ids) fits[id] = fit_of(id);

  double global_var_in = 0.0, global_var_out = 0.0;
  if (cfg.variance_mode == LiraVarianceMode::kGlobal) {
    // Pooled within-group variance across samples.
    double ss_in = 0.0, ss_out = 0.0;
    long dof_in = 0, dof_out = 0;
    for (const auto& [id, f] : fits) {
      ss_in += f.var_in * (f.n_in - 1);
      dof_in += f.n_in - 1;
      ss_out += f.var_out * (f.n_out - 1);
      dof_out += f.n_out - 1;
    }
    global_var_in = std::max(ss_in / static_cast<double>(dof_in), kMinVariance);
    global_var_out = std::max(ss_out / static_cast<double>(dof_out), kMinVariance);
  }

  return detail::score_eval_sets("lira", split, [&](int i) {
    const Fit& f = fits.at(i);
    const ProbabilityVector out = target.query(data.features.col(i));
    const double obs = logit_scale(out[data.labels[static_cast<size_t>(i)]]);
    const double var_in = cfg.variance_mode == LiraVarianceMode::kGlobal
                              ? global_var_in
                              : std::max(f.var_in, kMinVariance);
    const double var_out = cfg.variance_mode == LiraVarianceMode::kGlobal
                               ? global_var_out
                               : std::max(f.var_out, kMinVariance);
    return lira_log_ratio(obs, f.mu_in, var_in, f.mu_out, var_out);
  });
}

// ---------------------------------------------------------------------------
// Label-only attacks
// ---------------------------------------------------------------------------

/// Noise-robustness attack for binary-feature inputs: flip `flip_count`
/// random bits per variant, `noise_trials` times, and score each sample by
/// the fraction of noisy variants still classified as its true label.
inline MembershipScoreSet attack_boundary_noise(TargetOracle& target, const Dataset& data,
                                                const ThreatModelSplit& split, int noise_trials,
                                                int flip_count, uint64_t seed) {
  if (noise_trials < 1) throw ConfigError("noise_trials must be >= 1");
  if (flip_count < 0 || flip_count > data.dim())
    throw ConfigError("flip_count must lie in [0, feature count]");
  for (const auto& f : data.domain.features)
    if (f.kind != FeatureKind::kBinary)
      throw ConfigError("the noise-boundary attack requires a binary-feature domain");

  return detail::score_eval_sets("boundary_noise", split, [&](int i) {
    const int y = data.labels[static_cast<size_t>(i)];
    Rng rng = Rng::for_stream(hash_combine(seed, static_cast<uint64_t>(i)),
                              /*stream=*/0x626e6f69);  // per-sample noise stream
    int correct = 0;
    for (int t = 0; t < noise_trials; ++t) {
      VectorXd x = data.features.col(i);
      for (int pos : rng.sample_without_replacement(data.dim(), flip_count))
        x[pos] = 1.0 - x[pos];
      if (target.query_label(x) == y) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(noise_trials);
  });
}

/// Pluggable input transform producing m deterministic variants per sample.
struct Augmenter {
  int m = 1;
  std::function<VectorXd(const VectorXd&, int)> apply;

  /// Single variant, unchanged input: the attack degenerates to
  /// prediction-correctness.
  static Augmenter identity() {
    return Augmenter{1, [](const VectorXd& x, int) { return x; }};
  }

  /// m fixed flip patterns (the same positions for every sample), each
  /// flipping flips_per_variant bits; the binary-feature counterpart of
  /// image translations.
  static Augmenter binary_flips(int dim, int m, int flips_per_variant, uint64_t seed) {
    if (m < 1) throw ConfigError("augmenter needs m >= 1 variants");
    if (flips_per_variant < 0 || flips_per_variant > dim)
      throw ConfigError("flips_per_variant must lie in [0, feature count]");
    std::vector<std::vector<int>> patterns;
    patterns.reserve(static_cast<size_t>(m));
    for (int v = 0; v < m; ++v) {
      Rng rng = Rng::for_stream(hash_combine(seed, static_cast<uint64_t>(v)),
                                /*stream=*/0x617567);  // "aug"
      patterns.push_back(rng.sample_without_replacement(dim, flips_per_variant));
    }
    return Augmenter{m, [patterns](const VectorXd& x, int v) {
                       VectorXd out = x;
                       for (int pos : patterns[static_cast<size_t>(v)]) out[pos] = 1.0 - out[pos];
                       return out;
                     }};
  }
};

/// Builds the per-sample length-m correctness bit-vector over augmented
/// variants, trains an inference MLP on the adversary-known sets, and scores
/// the eval sets with its member probability.
inline MembershipScoreSet attack_augmentation(TargetOracle& target, const Dataset& data,
                                              const ThreatModelSplit& split,
                                              const Augmenter& aug,
                                              const NnAttackConfig& cfg) {
  if (aug.m < 1 || !aug.apply) throw ConfigError("augmenter is not configured");
  auto features_of = [&](int i) {
    const int y = data.labels[static_cast<size_t>(i)];
    VectorXd f(aug.m);
    for (int v = 0; v < aug.m; ++v)
      f[v] = target.query_label(aug.apply(data.features.col(i), v)) == y ? 1.0 : 0.0;
    return f;
  };

  const long n_adv =
      static_cast<long>(split.adv_member_idx.size() + split.adv_nonmember_idx.size());
  MatrixXd feats(aug.m, n_adv);
  std::vector<int> labels;
  labels.reserve(static_cast<size_t>(n_adv));
  long col = 0;
  for (int i : split.adv_member_idx) {
    feats.col(col++) = features_of(i);
    labels.push_back(1);
  }
  for (int i : split.adv_nonmember_idx) {
    feats.col(col++) = features_of(i);
    labels.push_back(0);
  }

  const MlpModel attack_model = detail::train_attack_model(feats, labels, cfg);
  return detail::score_eval_sets("augmentation", split, [&](int i) {
    return detail::attack_model_score(attack_model, features_of(i));
  });
}

// ---------------------------------------------------------------------------
// Unified dispatch
// ---------------------------------------------------------------------------

enum class AttackKind {
  kLoss,
  kConfidence,
  kEntropy,
  kModifiedEntropy,
  kCorrectness,
  kNn,
  kLira,
  kBoundaryNoise,
  kAugmentation
};

inline std::string to_string(AttackKind k) {
  switch (k) {
    case AttackKind::kLoss: return "loss";
    case AttackKind::kConfidence: return "confidence";
    case AttackKind::kEntropy: return "entropy";
    case AttackKind::kModifiedEntropy: return "modified_entropy";
    case AttackKind::kCorrectness: return "correctness";
    case AttackKind::kNn: return "nn";
    case AttackKind::kLira: return "lira";
    case AttackKind::kBoundaryNoise: return "boundary_noise";
    case AttackKind::kAugmentation: return "augmentation";
  }
  throw ConfigError("unknown attack kind");
}

inline AttackKind attack_kind_from_string(const std::string& s) {
  if (s == "loss") return AttackKind::kLoss;
  if (s == "confidence") return AttackKind::kConfidence;
  if (s == "entropy") return AttackKind::kEntropy;
  if (s == "modified_entropy" || s == "m-entropy") return AttackKind::kModifiedEntropy;
  if (s == "correctness") return AttackKind::kCorrectness;
  if (s == "nn") return AttackKind::kNn;
  if (s == "lira") return AttackKind::kLira;
  if (s == "boundary_noise") return AttackKind::kBoundaryNoise;
  if (s == "augmentation") return AttackKind::kAugmentation;
  throw ConfigError("unknown attack: \"" + s + "\"");
}

/// Per-attack parameters for a whole suite run.
struct AttackSuiteConfig {
  uint64_t seed = 1;
  NnAttackConfig nn;
  LiraConfig lira;
  int noise_trials = 40;
  int noise_flips = 8;
  int aug_variants = 8;
  int aug_flips = 4;
};

struct AttackRunResult {
  MembershipScoreSet scores;
  long target_queries = 0;
};

/// Runs one attack against a target with its own derived RNG streams, so
/// results are identical regardless of which other attacks run or in what
/// order.
inline AttackRunResult run_attack(AttackKind kind, const DefendedModel& target,
                                  const Dataset& data, const ThreatModelSplit& split,
                                  const AttackSuiteConfig& cfg) {
  TargetOracle oracle(target,
                      hash_combine(cfg.seed, static_cast<uint64_t>(kind) + 0x6174743100ULL));
  AttackRunResult result;
  switch (kind) {
    case AttackKind::kLoss:
      result.scores = attack_loss(oracle, data, split);
      break;
    case AttackKind::kConfidence:
      result.scores = attack_confidence(oracle, data, split);
      break;
    case AttackKind::kEntropy:
      result.scores = attack_entropy(oracle, data, split);
      break;
    case AttackKind::kModifiedEntropy:
      result.scores = attack_modified_entropy(oracle, data, split);
      break;
    case AttackKind::kCorrectness:
      result.scores = attack_correctness(oracle, data, split);
      break;
    case AttackKind::kNn: {
      NnAttackConfig nn = cfg.nn;
      nn.seed = hash_combine(cfg.seed, 0x6e6e);
      result.scores = attack_nn(oracle, data, split, nn);
      break;
    }
    case AttackKind::kLira: {
      LiraConfig lira = cfg.lira;
      lira.seed = hash_combine(cfg.seed, 0x6c697261);
      result.scores = attack_lira(oracle, data, split, lira);
      break;
    }
    case AttackKind::kBoundaryNoise:
      result.scores = attack_boundary_noise(oracle, data, split, cfg.noise_trials,
                                            cfg.noise_flips, hash_combine(cfg.seed, 0x626e));
      break;
    case AttackKind::kAugmentation: {
      const Augmenter aug = Augmenter::binary_flips(data.dim(), cfg.aug_variants, cfg.aug_flips,
                                                    hash_combine(cfg.seed, 0x6175));
      NnAttackConfig nn = cfg.nn;
      nn.seed = hash_combine(cfg.seed, 0x61756e6e);
      result.scores = attack_augmentation(oracle, data, split, aug, nn);
      break;
    }
  }
  result.target_queries = oracle.query_count();
  return result;
}

}  // namespace hampbench
