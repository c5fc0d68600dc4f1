// Defense trainers and the testing-time output modification.
//
// One core minibatch-SGD loop serves every trainer; the variants differ only
// in their target-label matrices and regularizer strength. This makes the
// degenerate case exact: gamma = 0 soft labels are bitwise one-hot and
// alpha = 0 skips the regularizer term structurally, so that configuration
// reproduces the undefended trainer bit for bit under a shared seed.
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hampbench/data.hpp"
#include "hampbench/errors.hpp"
#include "hampbench/labels.hpp"
#include "hampbench/mlp.hpp"
#include "hampbench/prob.hpp"
#include "hampbench/random.hpp"

namespace hampbench {

enum class DefenseKind { kHamp, kUndefended, kLabelSmoothing, kEarlyStop };

inline std::string to_string(DefenseKind k) {
  switch (k) {
    case DefenseKind::kHamp: return "hamp";
    case DefenseKind::kUndefended: return "undefended";
    case DefenseKind::kLabelSmoothing: return "label_smoothing";
    case DefenseKind::kEarlyStop: return "early_stop";
  }
  throw ConfigError("unknown defense kind");
}

inline DefenseKind defense_kind_from_string(const std::string& s) {
  if (s == "hamp") return DefenseKind::kHamp;
  if (s == "undefended") return DefenseKind::kUndefended;
  if (s == "label_smoothing") return DefenseKind::kLabelSmoothing;
  if (s == "early_stop") return DefenseKind::kEarlyStop;
  throw ConfigError("unknown defense kind: \"" + s + "\"");
}

struct OptimizerConfig {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double lr_decay_factor = 0.1;
  // Learning rate is multiplied by lr_decay_factor once each listed fraction
  // of total epochs is reached.
  std::vector<double> lr_drop_at = {0.5, 0.75};

  double lr_at_epoch(int epoch_index, int total_epochs) const {
    double v = lr;
    for (double frac : lr_drop_at)
      if (epoch_index >= static_cast<int>(frac * total_epochs)) v *= lr_decay_factor;
    return v;
  }
};

struct TrainConfig {
  std::vector<int> hidden_dims = {256, 128};
  int epochs = 60;
  int batch_size = 64;
  OptimizerConfig optimizer;
  uint64_t seed = 1;
  // Per-epoch training accuracy costs an extra forward pass over the train
  // set; shadow-model training turns it off.
  bool track_train_metrics = true;

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(optimizer.lr > 0.0)) throw ConfigError("learning rate must be > 0");
    for (int h : hidden_dims)
      if (h < 1) throw ConfigError("hidden dims must be positive");
  }
};

struct HampConfig {
  TrainConfig train;
  double gamma = 0.8;
  double alpha = 0.01;
  bool output_modification = true;

  void validate() const {
    train.validate();
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("gamma must lie in [0,1]");
    if (alpha < 0.0) throw ConfigError("alpha must be >= 0");
  }
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double objective = std::numeric_limits<double>::quiet_NaN();  // mean minibatch objective
  double train_accuracy = std::numeric_limits<double>::quiet_NaN();
  double val_accuracy = 0.0;
  double lr = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int selected_epoch = 0;  // 1-based epoch whose weights were kept
  double final_train_accuracy = 0.0;
  double final_val_accuracy = 0.0;
  double final_test_accuracy = 0.0;
};

inline nlohmann::json to_json(const TrainReport& r) {
  // Untracked metrics are NaN in the structs; the JSON form uses null so
  // consumers never see a non-finite number.
  const auto num_or_null = [](double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json();
  };
  nlohmann::json j;
  j["selected_epoch"] = r.selected_epoch;
  j["final_train_accuracy"] = r.final_train_accuracy;
  j["final_val_accuracy"] = r.final_val_accuracy;
  j["final_test_accuracy"] = r.final_test_accuracy;
  j["epochs"] = nlohmann::json::array();
  for (const auto& e : r.epochs) {
    nlohmann::json ej;
    ej["epoch"] = e.epoch;
    ej["objective"] = num_or_null(e.objective);
    ej["train_accuracy"] = num_or_null(e.train_accuracy);
    ej["val_accuracy"] = e.val_accuracy;
    ej["lr"] = e.lr;
    j["epochs"].push_back(ej);
  }
  return j;
}

/// A trained classifier plus its testing-time behavior. When
/// output_modification_enabled, predictions route through modify_output.
struct DefendedModel {
  MlpModel model;
  DefenseKind defense_kind = DefenseKind::kUndefended;
  bool output_modification_enabled = false;
  uint64_t rng_seed = 0;  // stream seed for the random-sample draws
  InputDomain domain;
  double gamma = 0.0;
  double alpha = 0.0;
  // Optional pre-drawn random-sample pool; empty means a fresh draw per
  // query. Generation is independent of runtime inference either way.
  std::vector<VectorXd> rand_pool;
};

/// Top-1 accuracy of the raw network over the samples named by idx.
inline double accuracy(const MlpModel& m, const Dataset& data, const std::vector<int>& idx) {
  if (idx.empty()) throw MetricError("accuracy over an empty index set");
  const MatrixXd x = gather_columns(data.features, idx);
  const std::vector<int> preds = predict_batch(m, x);
  int hits = 0;
  for (size_t i = 0; i < idx.size(); ++i)
    if (preds[i] == data.labels[static_cast<size_t>(idx[i])]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(idx.size());
}

// ---------------------------------------------------------------------------
// Core training loop
// ---------------------------------------------------------------------------

namespace detail {

inline MatrixXd one_hot_matrix(const std::vector<int>& labels, int k) {
  MatrixXd y = MatrixXd::Zero(k, static_cast<long>(labels.size()));
  for (size_t i = 0; i < labels.size(); ++i) y(labels[i], static_cast<long>(i)) = 1.0;
  return y;
}

inline MatrixXd soft_label_matrix(const std::vector<int>& labels, const SoftLabelSpec& spec) {
  MatrixXd y(spec.k, static_cast<long>(labels.size()));
  for (size_t i = 0; i < labels.size(); ++i) {
    const ProbabilityVector lbl = make_soft_label(labels[i], spec);
    for (int r = 0; r < spec.k; ++r) y(r, static_cast<long>(i)) = lbl[r];
  }
  return y;
}

inline MatrixXd smooth_label_matrix(const std::vector<int>& labels, const SmoothLabelSpec& spec) {
  MatrixXd y(spec.k, static_cast<long>(labels.size()));
  for (size_t i = 0; i < labels.size(); ++i) {
    const ProbabilityVector lbl = make_smooth_label(labels[i], spec);
    for (int r = 0; r < spec.k; ++r) y(r, static_cast<long>(i)) = lbl[r];
  }
  return y;
}

struct TrajectorySnapshot {
  MlpModel best_model;
  int best_epoch = 0;
  double best_val_accuracy = -1.0;
  std::vector<EpochStats> trace;
};

/// Minibatch SGD over the train split with per-epoch validation scoring.
/// on_epoch_end(epoch_1based, snapshot) fires after every epoch so callers
/// can harvest intermediate checkpoints (early stopping).
template <typename EpochHook>
inline TrajectorySnapshot run_sgd(const TrainConfig& cfg, const Dataset& data,
                                  const ThreatModelSplit& split, const MatrixXd& labels_train,
                                  double alpha, EpochHook&& on_epoch_end) {
  cfg.validate();
  if (split.train_idx.empty()) throw TrainingError("empty training split");
  if (split.val_idx.empty()) throw TrainingError("empty validation split");

  std::vector<int> dims;
  dims.push_back(data.dim());
  for (int h : cfg.hidden_dims) dims.push_back(h);
  dims.push_back(data.k);

  Rng init_rng = Rng::for_stream(cfg.seed, /*stream=*/0x696e6974);      // "init"
  Rng shuffle_rng = Rng::for_stream(cfg.seed, /*stream=*/0x73686668);   // "shfh"
  MlpModel model = MlpModel::init(dims, init_rng);
  SgdState state = SgdState::zero_like(model);

  const MatrixXd train_x = gather_columns(data.features, split.train_idx);
  const int n_train = static_cast<int>(split.train_idx.size());
  std::vector<int> order(static_cast<size_t>(n_train));
  for (int i = 0; i < n_train; ++i) order[static_cast<size_t>(i)] = i;

  TrajectorySnapshot snap;
  snap.best_model = model;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    SgdConfig step_cfg{cfg.optimizer.lr_at_epoch(epoch, cfg.epochs), cfg.optimizer.momentum,
                       cfg.optimizer.weight_decay};
    shuffle_rng.shuffle(order);

    double objective_sum = 0.0;
    long objective_samples = 0;
    for (int start = 0; start < n_train; start += cfg.batch_size) {
      const int bsz = std::min(cfg.batch_size, n_train - start);
      MatrixXd bx(data.dim(), bsz);
      MatrixXd by(data.k, bsz);
      for (int b = 0; b < bsz; ++b) {
        const int src = order[static_cast<size_t>(start + b)];
        bx.col(b) = train_x.col(src);
        by.col(b) = labels_train.col(src);
      }
      double batch_objective = 0.0;
      const GradientSet g = hamp_gradient(model, bx, by, alpha, &batch_objective);
      objective_sum += batch_objective * bsz;
      objective_samples += bsz;
      sgd_step(model, g, state, step_cfg);
    }

    EpochStats es;
    es.epoch = epoch + 1;
    es.lr = step_cfg.lr;
    es.objective = objective_sum / static_cast<double>(objective_samples);
    if (!std::isfinite(es.objective))
      throw TrainingError("objective diverged (non-finite) at epoch " +
                          std::to_string(epoch + 1));
    if (cfg.track_train_metrics) es.train_accuracy = accuracy(model, data, split.train_idx);
    es.val_accuracy = accuracy(model, data, split.val_idx);
    snap.trace.push_back(es);

    if (es.val_accuracy > snap.best_val_accuracy) {
      snap.best_val_accuracy = es.val_accuracy;
      snap.best_epoch = epoch + 1;
      snap.best_model = model;
    }
    on_epoch_end(epoch + 1, snap);
  }
  return snap;
}

inline TrainReport make_report(const TrajectorySnapshot& snap, const Dataset& data,
                               const ThreatModelSplit& split) {
  TrainReport r;
  r.epochs = snap.trace;
  r.selected_epoch = snap.best_epoch;
  r.final_train_accuracy = accuracy(snap.best_model, data, split.train_idx);
  r.final_val_accuracy = snap.best_val_accuracy;
  r.final_test_accuracy = accuracy(snap.best_model, data, split.test_idx);
  return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Trainers
// ---------------------------------------------------------------------------

inline std::pair<DefendedModel, TrainReport> train_hamp(const HampConfig& cfg,
                                                        const Dataset& data,
                                                        const ThreatModelSplit& split) {
  cfg.validate();
  data.validate();
  const SoftLabelSpec spec = SoftLabelSpec::make(data.k, cfg.gamma);
  const MatrixXd labels =
      detail::soft_label_matrix(gather_labels(data.labels, split.train_idx), spec);
  auto snap = detail::run_sgd(cfg.train, data, split, labels, cfg.alpha, [](int, const auto&) {});

  DefendedModel dm;
  dm.model = snap.best_model;
  dm.defense_kind = DefenseKind::kHamp;
  dm.output_modification_enabled = cfg.output_modification;
  dm.rng_seed = hash_combine(cfg.train.seed, /*stream=*/0x7872616e64);  // "xrand"
  dm.domain = data.domain;
  dm.gamma = cfg.gamma;
  dm.alpha = cfg.alpha;
  return {std::move(dm), detail::make_report(snap, data, split)};
}

inline std::pair<DefendedModel, TrainReport> train_undefended(const TrainConfig& cfg,
                                                              const Dataset& data,
                                                              const ThreatModelSplit& split) {
  cfg.validate();
  data.validate();
  const MatrixXd labels =
      detail::one_hot_matrix(gather_labels(data.labels, split.train_idx), data.k);
  auto snap = detail::run_sgd(cfg, data, split, labels, /*alpha=*/0.0, [](int, const auto&) {});

  DefendedModel dm;
  dm.model = snap.best_model;
  dm.defense_kind = DefenseKind::kUndefended;
  dm.output_modification_enabled = false;
  dm.rng_seed = hash_combine(cfg.seed, /*stream=*/0x7872616e64);
  dm.domain = data.domain;
  return {std::move(dm), detail::make_report(snap, data, split)};
}

inline std::pair<DefendedModel, TrainReport> train_baseline_ls(double intensity,
                                                               const TrainConfig& cfg,
                                                               const Dataset& data,
                                                               const ThreatModelSplit& split) {
  cfg.validate();
  data.validate();
  const SmoothLabelSpec spec{data.k, intensity};
  const MatrixXd labels =
      detail::smooth_label_matrix(gather_labels(data.labels, split.train_idx), spec);
  auto snap = detail::run_sgd(cfg, data, split, labels, /*alpha=*/0.0, [](int, const auto&) {});

  DefendedModel dm;
  dm.model = snap.best_model;
  dm.defense_kind = DefenseKind::kLabelSmoothing;
  dm.output_modification_enabled = false;
  dm.rng_seed = hash_combine(cfg.seed, /*stream=*/0x7872616e64);
  dm.domain = data.domain;
  return {std::move(dm), detail::make_report(snap, data, split)};
}

/// One undefended checkpoint per requested epoch, all cut from a single
/// training trajectory. The checkpoint at epoch e carries the best-validation
/// weights seen in epochs 1..e, so epoch_list = [cfg.epochs] reproduces
/// train_undefended exactly.
inline std::vector<std::pair<DefendedModel, TrainReport>> early_stop_checkpoints(
    const TrainConfig& cfg, const Dataset& data, const ThreatModelSplit& split,
    const std::vector<int>& epoch_list) {
  cfg.validate();
  data.validate();
  if (epoch_list.empty()) throw ConfigError("epoch_list must not be empty");
  for (int e : epoch_list)
    if (e < 1 || e > cfg.epochs)
      throw ConfigError("checkpoint epoch " + std::to_string(e) + " outside [1," +
                        std::to_string(cfg.epochs) + "]");

  const MatrixXd labels =
      detail::one_hot_matrix(gather_labels(data.labels, split.train_idx), data.k);
  std::vector<detail::TrajectorySnapshot> snaps(epoch_list.size());
  detail::run_sgd(cfg, data, split, labels, /*alpha=*/0.0,
                  [&](int epoch, const detail::TrajectorySnapshot& snap) {
                    for (size_t i = 0; i < epoch_list.size(); ++i)
                      if (epoch_list[i] == epoch) snaps[i] = snap;
                  });

  std::vector<std::pair<DefendedModel, TrainReport>> out;
  for (const auto& snap : snaps) {
    DefendedModel dm;
    dm.model = snap.best_model;
    dm.defense_kind = DefenseKind::kEarlyStop;
    dm.output_modification_enabled = false;
    dm.rng_seed = hash_combine(cfg.seed, /*stream=*/0x7872616e64);
    dm.domain = data.domain;
    out.emplace_back(std::move(dm), detail::make_report(snap, data, split));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Testing-time output modification
// ---------------------------------------------------------------------------

/// Rearranges rand_scores' values so the result orders exactly like scores:
/// the i-th largest rand value sits at the position of the i-th largest
/// score. Ties in scores break by original index (stable); tied rand values
/// are handed out in index order. The output multiset equals rand_scores'.
inline ProbabilityVector modify_output(const ProbabilityVector& scores,
                                       const ProbabilityVector& rand_scores) {
  const int k = scores.size();
  if (rand_scores.size() != k)
    throw Error("modify_output requires equal-length score vectors");

  std::vector<int> score_order(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) score_order[static_cast<size_t>(i)] = i;
  std::sort(score_order.begin(), score_order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });

  std::vector<double> rand_sorted(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) rand_sorted[static_cast<size_t>(i)] = rand_scores[i];
  std::sort(rand_sorted.begin(), rand_sorted.end(), std::greater<double>());

  VectorXd out(k);
  for (int rank = 0; rank < k; ++rank)
    out[score_order[static_cast<size_t>(rank)]] = rand_sorted[static_cast<size_t>(rank)];
  return ProbabilityVector(std::move(out));
}

/// Black-box prediction: raw softmax output, or — when modification is
/// enabled — the output rewritten with the scores of a random valid input
/// (fresh draw per query unless a pool was attached). Pure given the rng.
inline ProbabilityVector predict_defended(const DefendedModel& dm, const VectorXd& x, Rng& rng) {
  ProbabilityVector raw = forward(dm.model, x);
  if (!dm.output_modification_enabled) return raw;
  ProbabilityVector rand_out =
      dm.rand_pool.empty()
          ? forward(dm.model, gen_random_input(dm.domain, rng))
          : forward(dm.model, dm.rand_pool[static_cast<size_t>(
                                  rng.next_int(static_cast<int>(dm.rand_pool.size())))]);
  return modify_output(raw, rand_out);
}

/// Draws a reusable random-sample pool for throughput-sensitive deployments.
inline void attach_rand_pool(DefendedModel& dm, int pool_size, Rng& rng) {
  if (pool_size < 1) throw ConfigError("pool_size must be >= 1");
  dm.rand_pool.clear();
  dm.rand_pool.reserve(static_cast<size_t>(pool_size));
  for (int i = 0; i < pool_size; ++i) dm.rand_pool.push_back(gen_random_input(dm.domain, rng));
}

/// Top-1 accuracy through the defended prediction path (modification and
/// all); equals raw accuracy by the argsort-preservation guarantee.
inline double defended_accuracy(const DefendedModel& dm, const Dataset& data,
                                const std::vector<int>& idx, Rng& rng) {
  if (idx.empty()) throw MetricError("accuracy over an empty index set");
  int hits = 0;
  for (int i : idx) {
    const ProbabilityVector p = predict_defended(dm, data.features.col(i), rng);
    if (p.argmax() == data.labels[static_cast<size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(idx.size());
}

// ---------------------------------------------------------------------------
// Checkpoint serialization
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'H', 'A', 'M', 'P', 'C', 'K', 'P', '1'};
inline constexpr uint32_t kCheckpointVersion = 1;

inline void write_u32_le(std::ostream& out, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

inline void write_u64_le(std::ostream& out, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

inline uint32_t read_u32_le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

inline uint64_t read_u64_le(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void write_f64_le(std::ostream& out, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, 8);
  write_u64_le(out, bits);
}

inline double read_f64_le(std::istream& in) {
  const uint64_t bits = read_u64_le(in);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

inline nlohmann::json domain_to_json(const InputDomain& dom) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : dom.features) {
    nlohmann::json fj;
    if (f.kind == FeatureKind::kBinary) {
      fj["kind"] = "binary";
    } else {
      fj["kind"] = "interval";
      fj["lo"] = f.lo;
      fj["hi"] = f.hi;
    }
    features.push_back(fj);
  }
  return nlohmann::json{{"features", features}};
}

inline InputDomain domain_from_json(const nlohmann::json& j) {
  InputDomain dom;
  for (const auto& f : j.at("features")) {
    const std::string kind = f.at("kind").get<std::string>();
    if (kind == "binary")
      dom.features.push_back(FeatureDomain::binary());
    else if (kind == "interval")
      dom.features.push_back(FeatureDomain::interval(f.at("lo").get<double>(),
                                                     f.at("hi").get<double>()));
    else
      throw DataError("checkpoint domain has unknown feature kind: " + kind);
  }
  return dom;
}

}  // namespace detail

/// Binary layout: magic "HAMPCKP1", u32 version, u64 header length, JSON
/// header (defense kind, gamma/alpha, rng seed, modification flag, layer
/// dims, input domain), then per layer the weight matrix (column-major) and
/// bias vector as little-endian 64-bit floats.
inline void save_checkpoint(const DefendedModel& dm, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(detail::kCheckpointMagic, 8);
  detail::write_u32_le(out, detail::kCheckpointVersion);

  nlohmann::json header;
  header["defense_kind"] = to_string(dm.defense_kind);
  header["gamma"] = dm.gamma;
  header["alpha"] = dm.alpha;
  header["rng_seed"] = dm.rng_seed;
  header["output_modification"] = dm.output_modification_enabled;
  header["layer_dims"] = dm.model.layer_dims;
  header["domain"] = detail::domain_to_json(dm.domain);
  const std::string hs = header.dump();
  detail::write_u64_le(out, hs.size());
  out.write(hs.data(), static_cast<long>(hs.size()));

  for (int i = 0; i < dm.model.num_layers(); ++i) {
    const auto& w = dm.model.weights[static_cast<size_t>(i)];
    const auto& b = dm.model.biases[static_cast<size_t>(i)];
    for (long c = 0; c < w.cols(); ++c)
      for (long r = 0; r < w.rows(); ++r) detail::write_f64_le(out, w(r, c));
    for (long r = 0; r < b.size(); ++r) detail::write_f64_le(out, b[r]);
  }
  if (!out) throw DataError("checkpoint write failed: " + path);
}

inline DefendedModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kCheckpointMagic, 8) != 0)
    throw DataError("not a checkpoint file (bad magic): " + path);
  const uint32_t version = detail::read_u32_le(in);
  if (version != detail::kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  const uint64_t header_len = detail::read_u64_le(in);
  std::string hs(header_len, '\0');
  in.read(hs.data(), static_cast<long>(header_len));
  if (!in) throw DataError("truncated checkpoint header: " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hs);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("corrupt checkpoint header: ") + e.what());
  }

  DefendedModel dm;
  try {
    dm.defense_kind = defense_kind_from_string(header.at("defense_kind").get<std::string>());
    dm.gamma = header.at("gamma").get<double>();
    dm.alpha = header.at("alpha").get<double>();
    dm.rng_seed = header.at("rng_seed").get<uint64_t>();
    dm.output_modification_enabled = header.at("output_modification").get<bool>();
    dm.model.layer_dims = header.at("layer_dims").get<std::vector<int>>();
    dm.domain = detail::domain_from_json(header.at("domain"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint header missing fields: ") + e.what());
  }
  if (dm.model.layer_dims.size() < 2) throw DataError("checkpoint declares too few layers");
  if (dm.domain.dim() != dm.model.layer_dims.front())
    throw DataError("checkpoint domain does not match the model input dimension");

  for (size_t i = 0; i + 1 < dm.model.layer_dims.size(); ++i) {
    const int rows = dm.model.layer_dims[i + 1];
    const int cols = dm.model.layer_dims[i];
    MatrixXd w(rows, cols);
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < rows; ++r) w(r, c) = detail::read_f64_le(in);
    VectorXd b(rows);
    for (int r = 0; r < rows; ++r) b[r] = detail::read_f64_le(in);
    if (!in) throw DataError("truncated checkpoint weights: " + path);
    dm.model.weights.push_back(std::move(w));
    dm.model.biases.push_back(std::move(b));
  }
  in.peek();
  if (!in.eof()) throw DataError("trailing bytes after checkpoint weights: " + path);
  return dm;
}

// ---------------------------------------------------------------------------
// Hyperparameter grid search
// ---------------------------------------------------------------------------

struct GridSearchCell {
  double gamma = 0.0;
  double alpha = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double gap_points = 0.0;  // (train - val) * 100
};

struct GridSearchResult {
  std::vector<GridSearchCell> cells;
  int best_index = -1;
};

/// Selects the highest-validation-accuracy cell whose train-validation gap
/// stays within max_gap_points; if no cell qualifies, falls back to the
/// highest validation accuracy outright. Cells train with disjoint RNG
/// streams derived from the base seed.
inline GridSearchResult grid_search(const std::vector<double>& gammas,
                                    const std::vector<double>& alphas, const TrainConfig& base,
                                    const Dataset& data, const ThreatModelSplit& split,
                                    double max_gap_points = 10.0) {
  if (gammas.empty() || alphas.empty()) throw ConfigError("grid_search needs a non-empty grid");
  GridSearchResult result;
  int cell_index = 0;
  for (double g : gammas) {
    for (double a : alphas) {
      HampConfig cfg;
      cfg.train = base;
      cfg.train.seed = hash_combine(base.seed, static_cast<uint64_t>(cell_index));
      cfg.train.track_train_metrics = false;
      cfg.gamma = g;
      cfg.alpha = a;
      auto [dm, report] = train_hamp(cfg, data, split);
      GridSearchCell cell;
      cell.gamma = g;
      cell.alpha = a;
      cell.train_accuracy = report.final_train_accuracy;
      cell.val_accuracy = report.final_val_accuracy;
      cell.gap_points = (report.final_train_accuracy - report.final_val_accuracy) * 100.0;
      result.cells.push_back(cell);
      ++cell_index;
    }
  }
  double best_val = -1.0;
  for (size_t i = 0; i < result.cells.size(); ++i) {
    const auto& c = result.cells[i];
    if (c.gap_points <= max_gap_points && c.val_accuracy > best_val) {
      best_val = c.val_accuracy;
      result.best_index = static_cast<int>(i);
    }
  }
  if (result.best_index < 0) {
    for (size_t i = 0; i < result.cells.size(); ++i)
      if (result.cells[i].val_accuracy > best_val) {
        best_val = result.cells[i].val_accuracy;
        result.best_index = static_cast<int>(i);
      }
  }
  return result;
}

}  // namespace hampbench
