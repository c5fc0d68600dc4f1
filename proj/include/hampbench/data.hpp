// Dataset storage, CSV ingestion with a JSON schema sidecar, synthetic
// benchmark generation, threat-model splits, and the uniform random-input
// generator used by the testing-time defense.
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hampbench/errors.hpp"
#include "hampbench/prob.hpp"
#include "hampbench/random.hpp"

namespace hampbench {

enum class FeatureKind { kBinary, kInterval };

struct FeatureDomain {
  FeatureKind kind = FeatureKind::kBinary;
  double lo = 0.0;  // interval bounds; binary features are exactly {0,1}
  double hi = 1.0;

  static FeatureDomain binary() { return FeatureDomain{FeatureKind::kBinary, 0.0, 1.0}; }
  static FeatureDomain interval(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi))
      throw ConfigError("interval bounds must be finite");
    if (!(lo < hi)) throw ConfigError("interval requires lo < hi");
    return FeatureDomain{FeatureKind::kInterval, lo, hi};
  }

  bool contains(double v) const {
    if (kind == FeatureKind::kBinary) return v == 0.0 || v == 1.0;
    return v >= lo && v <= hi;
  }
};

/// Per-feature input domain; gen_random_input draws uniformly from it.
struct InputDomain {
  std::vector<FeatureDomain> features;

  int dim() const { return static_cast<int>(features.size()); }

  static InputDomain all_binary(int d) {
    InputDomain dom;
    dom.features.assign(static_cast<size_t>(d), FeatureDomain::binary());
    return dom;
  }
  static InputDomain all_interval(int d, double lo, double hi) {
    InputDomain dom;
    dom.features.assign(static_cast<size_t>(d), FeatureDomain::interval(lo, hi));
    return dom;
  }
};

/// Immutable after construction. Samples are stored one per column
/// (features: d x n) so minibatches are contiguous column blocks.
struct Dataset {
  MatrixXd features;        // d x n
  std::vector<int> labels;  // length n, values in [0, k)
  int k = 0;
  InputDomain domain;

  int n() const { return static_cast<int>(features.cols()); }
  int dim() const { return static_cast<int>(features.rows()); }

  void validate() const {
    if (n() < 1) throw DataError("dataset must contain at least one sample");
    if (k < 2) throw DataError("dataset must declare at least two classes");
    if (static_cast<int>(labels.size()) != n())
      throw DataError("label count does not match sample count");
    if (domain.dim() != dim())
      throw DataError("domain declares " + std::to_string(domain.dim()) +
                      " features, data has " + std::to_string(dim()));
    for (size_t i = 0; i < labels.size(); ++i)
      if (labels[i] < 0 || labels[i] >= k)
        throw DataError("label " + std::to_string(labels[i]) + " out of range at sample " +
                        std::to_string(i));
    for (int c = 0; c < n(); ++c)
      for (int r = 0; r < dim(); ++r)
        if (!domain.features[static_cast<size_t>(r)].contains(features(r, c)))
          throw DataError("feature value " + std::to_string(features(r, c)) +
                          " outside declared domain at sample " + std::to_string(c) +
                          ", feature " + std::to_string(r));
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline bool parse_double(std::string_view tok, double& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

inline bool parse_int(std::string_view tok, int& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  for (auto& t : out) {
    while (!t.empty() && (t.front() == ' ' || t.front() == '\t')) t.remove_prefix(1);
    while (!t.empty() && (t.back() == ' ' || t.back() == '\t' || t.back() == '\r'))
      t.remove_suffix(1);
  }
  return out;
}

}  // namespace detail

/// Parses a schema sidecar of the form
///   {"k": 20, "features": [{"kind": "binary"},
///                          {"kind": "interval", "lo": 0, "hi": 255}, ...]}
inline std::pair<int, InputDomain> load_schema(const std::string& schema_path) {
  std::ifstream in(schema_path);
  if (!in) throw DataError("cannot open schema file: " + schema_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("schema is not valid JSON (" + schema_path + "): " + e.what());
  }
  if (!j.contains("k") || !j["k"].is_number_integer())
    throw DataError("schema must declare an integer \"k\"");
  const int k = j["k"].get<int>();
  if (k < 2) throw DataError("schema k must be >= 2");
  if (!j.contains("features") || !j["features"].is_array() || j["features"].empty())
    throw DataError("schema must declare a non-empty \"features\" array");
  InputDomain dom;
  for (const auto& f : j["features"]) {
    const std::string kind = f.value("kind", "");
    if (kind == "binary") {
      dom.features.push_back(FeatureDomain::binary());
    } else if (kind == "interval") {
      if (!f.contains("lo") || !f.contains("hi"))
        throw DataError("interval feature in schema requires lo and hi");
      dom.features.push_back(FeatureDomain::interval(f["lo"].get<double>(), f["hi"].get<double>()));
    } else {
      throw DataError("unknown feature kind in schema: \"" + kind + "\"");
    }
  }
  return {k, dom};
}

inline void save_schema(int k, const InputDomain& domain, const std::string& schema_path) {
  nlohmann::json j;
  j["k"] = k;
  j["features"] = nlohmann::json::array();
  for (const auto& f : domain.features) {
    nlohmann::json fj;
    if (f.kind == FeatureKind::kBinary) {
      fj["kind"] = "binary";
    } else {
      fj["kind"] = "interval";
      fj["lo"] = f.lo;
      fj["hi"] = f.hi;
    }
    j["features"].push_back(fj);
  }
  std::ofstream out(schema_path, std::ios::binary);
  if (!out) throw DataError("cannot write schema file: " + schema_path);
  out << j.dump(2) << '\n';
}

/// One row per sample, final column the integer label, optional header row.
/// Every value is validated against the schema; nothing is coerced silently.
inline Dataset load_csv_dataset(const std::string& csv_path, const std::string& schema_path) {
  auto [k, domain] = load_schema(schema_path);
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file: " + csv_path);
  const int d = domain.dim();

  std::vector<double> values;  // d * n, column-appended
  std::vector<int> labels;
  std::string line;
  int line_no = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto toks = detail::split_csv_line(line);
    if (first_content_line) {
      first_content_line = false;
      double probe;
      if (!toks.empty() && !detail::parse_double(toks[0], probe)) continue;  // header row
    }
    if (static_cast<int>(toks.size()) != d + 1)
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(d + 1) +
                      " columns (features + label), found " + std::to_string(toks.size()));
    for (int j = 0; j < d; ++j) {
      double v;
      if (!detail::parse_double(toks[static_cast<size_t>(j)], v))
        throw DataError("line " + std::to_string(line_no) + ": cannot parse feature column " +
                        std::to_string(j) + " (\"" + std::string(toks[static_cast<size_t>(j)]) +
                        "\")");
      if (!domain.features[static_cast<size_t>(j)].contains(v))
        throw DataError("line " + std::to_string(line_no) + ": feature column " +
                        std::to_string(j) + " value " + detail::format_double(v) +
                        " outside declared domain");
      values.push_back(v);
    }
    int label;
    if (!detail::parse_int(toks.back(), label))
      throw DataError("line " + std::to_string(line_no) + ": label is not an integer (\"" +
                      std::string(toks.back()) + "\")");
    if (label < 0 || label >= k)
      throw DataError("line " + std::to_string(line_no) + ": label " + std::to_string(label) +
                      " outside [0," + std::to_string(k) + ")");
    labels.push_back(label);
  }
  if (labels.empty()) throw DataError("dataset file has no data rows: " + csv_path);

  Dataset ds;
  const int n = static_cast<int>(labels.size());
  ds.features = Eigen::Map<MatrixXd>(values.data(), d, n);
  ds.labels = std::move(labels);
  ds.k = k;
  ds.domain = std::move(domain);
  ds.validate();
  return ds;
}

inline void save_csv_dataset(const Dataset& ds, const std::string& csv_path,
                             const std::string& schema_path) {
  ds.validate();
  save_schema(ds.k, ds.domain, schema_path);
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset file: " + csv_path);
  for (int c = 0; c < ds.n(); ++c) {
    std::string row;
    for (int r = 0; r < ds.dim(); ++r) {
      row += detail::format_double(ds.features(r, c));
      row += ',';
    }
    row += std::to_string(ds.labels[static_cast<size_t>(c)]);
    row += '\n';
    out << row;
  }
}

enum class SynthMode { kBinary, kGaussian };

struct SynthConfig {
  int n = 4000;
  int d = 128;
  int k = 20;
  SynthMode mode = SynthMode::kBinary;
  double flip_prob = 0.15;    // binary mode: per-bit flip probability
  // Binary mode, optional class hierarchy: each class owns
  // subpatterns_per_class sub-prototypes, derived from the class prototype by
  // flipping each bit with probability subpattern_spread; every sample is
  // drawn from one sub-prototype. With many sub-patterns per class the train
  // set covers only some of them, so the train/test gap comes from unseen
  // sub-patterns (coverage sparsity) rather than from per-sample noise alone.
  // Defaults (1, 0.0) reproduce the flat k-prototype benchmark exactly.
  int subpatterns_per_class = 1;
  double subpattern_spread = 0.0;
  double noise_sigma = 0.25;  // gaussian mode: isotropic cluster noise
  bool threshold_bits = false;  // gaussian mode: threshold features to {0,1}
  uint64_t seed = 1;

  void validate() const {
    if (k < 2) throw ConfigError("synthesis requires k >= 2 classes");
    if (n < k) throw ConfigError("synthesis requires n >= k");
    if (d < 1) throw ConfigError("synthesis requires d >= 1");
    if (flip_prob < 0.0 || flip_prob > 1.0)
      throw ConfigError("flip_prob must lie in [0,1]");
    if (subpatterns_per_class < 1)
      throw ConfigError("subpatterns_per_class must be >= 1");
    if (subpattern_spread < 0.0 || subpattern_spread > 0.5)
      throw ConfigError("subpattern_spread must lie in [0,0.5]");
    if (mode != SynthMode::kBinary &&
        (subpatterns_per_class > 1 || subpattern_spread > 0.0))
      throw ConfigError("sub-pattern hierarchy applies to binary mode only");
    if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
  }
};

/// Binary mode: k random prototype bit vectors; each sample copies its class
/// prototype with independent per-bit flips at rate flip_prob. Gaussian mode:
/// k cluster means with isotropic noise, clamped to [0,1] (or thresholded to
/// bits). Labels are assigned round-robin, so class counts are exact to +-1.
inline Dataset synthesize_dataset(const SynthConfig& cfg) {
  cfg.validate();
  Dataset ds;
  ds.k = cfg.k;
  ds.features.resize(cfg.d, cfg.n);
  ds.labels.resize(static_cast<size_t>(cfg.n));

  Rng proto_rng = Rng::for_stream(cfg.seed, /*stream=*/0x70726f746f);  // "proto"
  Rng noise_rng = Rng::for_stream(cfg.seed, /*stream=*/0x6e6f697365);  // "noise"

  if (cfg.mode == SynthMode::kBinary) {
    MatrixXd protos(cfg.d, cfg.k);
    for (int c = 0; c < cfg.k; ++c)
      for (int r = 0; r < cfg.d; ++r) protos(r, c) = proto_rng.next_bool() ? 1.0 : 0.0;
    // The flat benchmark (no hierarchy) must keep its historical RNG
    // consumption so existing seeds reproduce byte-identical datasets.
    const int J = cfg.subpatterns_per_class;
    const bool hierarchical = J > 1 || cfg.subpattern_spread > 0.0;
    MatrixXd subs;
    if (hierarchical) {
      subs.resize(cfg.d, static_cast<Eigen::Index>(cfg.k) * J);
      for (int c = 0; c < cfg.k; ++c)
        for (int j = 0; j < J; ++j)
          for (int r = 0; r < cfg.d; ++r) {
            const bool flip = proto_rng.next_double() < cfg.subpattern_spread;
            const double base = protos(r, c);
            subs(r, c * J + j) = flip ? 1.0 - base : base;
          }
    }
    for (int i = 0; i < cfg.n; ++i) {
      const int y = i % cfg.k;
      ds.labels[static_cast<size_t>(i)] = y;
      const int col = hierarchical ? y * J + noise_rng.next_int(J) : y;
      const MatrixXd& basis = hierarchical ? subs : protos;
      for (int r = 0; r < cfg.d; ++r) {
        const bool flip = noise_rng.next_double() < cfg.flip_prob;
        const double base = basis(r, col);
        ds.features(r, i) = flip ? 1.0 - base : base;
      }
    }
    ds.domain = InputDomain::all_binary(cfg.d);
  } else {
    MatrixXd means(cfg.d, cfg.k);
    for (int c = 0; c < cfg.k; ++c)
      for (int r = 0; r < cfg.d; ++r) means(r, c) = proto_rng.next_uniform(0.25, 0.75);
    for (int i = 0; i < cfg.n; ++i) {
      const int y = i % cfg.k;
      ds.labels[static_cast<size_t>(i)] = y;
      for (int r = 0; r < cfg.d; ++r) {
        double v = means(r, y) + cfg.noise_sigma * noise_rng.next_normal();
        if (cfg.threshold_bits)
          v = v > 0.5 ? 1.0 : 0.0;
        else
          v = std::clamp(v, 0.0, 1.0);
        ds.features(r, i) = v;
      }
    }
    ds.domain = cfg.threshold_bits ? InputDomain::all_binary(cfg.d)
                                   : InputDomain::all_interval(cfg.d, 0.0, 1.0);
  }
  return ds;
}

/// The adversary knows half the members (adv_member) plus an equal number of
/// non-members (adv_nonmember); attacks are scored on the unknown halves
/// (eval_member = train \ adv_member, eval_nonmember). A held-out validation
/// set sized |train|/10 drives model selection, and test is the remainder.
struct ThreatModelSplit {
  std::vector<int> train_idx;
  std::vector<int> test_idx;
  std::vector<int> val_idx;
  std::vector<int> adv_member_idx;     // subset of train, |train|/2
  std::vector<int> adv_nonmember_idx;  // disjoint from train, same size
  std::vector<int> eval_member_idx;    // train \ adv_member
  std::vector<int> eval_nonmember_idx;
};

inline ThreatModelSplit make_threat_split(const Dataset& ds, int train_size, uint64_t seed) {
  if (train_size < 2) throw ConfigError("train_size must be >= 2");
  const int n = ds.n();
  const int n_val = train_size / 10;
  const int n_adv_member = train_size / 2;
  const int n_eval_member = train_size - n_adv_member;
  const int n_adv_nonmember = n_adv_member;
  const int n_eval_nonmember = n_eval_member;

  std::vector<int> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  Rng rng = Rng::for_stream(seed, /*stream=*/0x73706c6974);  // "split"
  rng.shuffle(order);

  size_t cursor = 0;
  auto take = [&](int count, const char* set_name) {
    if (cursor + static_cast<size_t>(count) > order.size())
      throw DataError(std::string("dataset too small: not enough samples for ") + set_name);
    std::vector<int> out(order.begin() + static_cast<long>(cursor),
                         order.begin() + static_cast<long>(cursor) + count);
    cursor += static_cast<size_t>(count);
    std::sort(out.begin(), out.end());
    return out;
  };

  ThreatModelSplit s;
  // Train first; its random prefix is the adversary-known half.
  std::vector<int> train_block(order.begin(), order.begin() + std::min<long>(train_size, n));
  if (static_cast<int>(train_block.size()) < train_size)
    throw DataError("dataset too small: not enough samples for train");
  cursor = static_cast<size_t>(train_size);
  s.adv_member_idx.assign(train_block.begin(), train_block.begin() + n_adv_member);
  s.eval_member_idx.assign(train_block.begin() + n_adv_member, train_block.end());
  std::sort(s.adv_member_idx.begin(), s.adv_member_idx.end());
  std::sort(s.eval_member_idx.begin(), s.eval_member_idx.end());
  std::sort(train_block.begin(), train_block.end());
  s.train_idx = std::move(train_block);

  s.val_idx = take(n_val, "validation");
  s.adv_nonmember_idx = take(n_adv_nonmember, "adversary non-members");
  s.eval_nonmember_idx = take(n_eval_nonmember, "evaluation non-members");
  const int n_test = n - static_cast<int>(cursor);
  if (n_test < 1) throw DataError("dataset too small: not enough samples for test");
  s.test_idx = take(n_test, "test");
  return s;
}

/// Independent uniform draw per feature: Bernoulli(0.5) on binary features,
/// Uniform(lo, hi) on intervals. Used by the testing-time defense.
inline VectorXd gen_random_input(const InputDomain& domain, Rng& rng) {
  VectorXd x(domain.dim());
  for (int i = 0; i < domain.dim(); ++i) {
    const auto& f = domain.features[static_cast<size_t>(i)];
    x[i] = f.kind == FeatureKind::kBinary ? (rng.next_bool() ? 1.0 : 0.0)
                                          : rng.next_uniform(f.lo, f.hi);
  }
  return x;
}

/// Column-gather helper: materialize the samples named by idx as a d x |idx|
/// batch (used by trainers and evaluators).
inline MatrixXd gather_columns(const MatrixXd& features, const std::vector<int>& idx) {
  MatrixXd out(features.rows(), static_cast<long>(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) out.col(static_cast<long>(i)) = features.col(idx[i]);
  return out;
}

inline std::vector<int> gather_labels(const std::vector<int>& labels, const std::vector<int>& idx) {
  std::vector<int> out(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) out[i] = labels[static_cast<size_t>(idx[i])];
  return out;
}

}  // namespace hampbench
