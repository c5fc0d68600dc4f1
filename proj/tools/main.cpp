// hampbench — membership-inference attack/defense workbench CLI.
//
// Subcommands: synth-data, train, attack, evaluate, ablate, report.
// Every command is deterministic given (config, seed): artifacts are
// byte-identical on rerun, carry no timestamps, and all outputs land under
// caller-named paths. Exit codes: 0 success, 2 config error, 3 data error,
// 4 training error, 5 attack error, 6 metric error, 1 anything else.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <cli11/CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hampbench/attacks.hpp"
#include "hampbench/data.hpp"
#include "hampbench/defense.hpp"
#include "hampbench/errors.hpp"
#include "hampbench/labels.hpp"
#include "hampbench/metrics.hpp"
#include "hampbench/mlp.hpp"
#include "hampbench/prob.hpp"
#include "hampbench/random.hpp"

namespace hb = hampbench;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Shared option bundles
// ---------------------------------------------------------------------------

struct DataOpts {
  std::string csv;
  std::string schema;
};

struct SplitOpts {
  int train_size = 1600;
  uint64_t split_seed = 1;
};

struct TrainOpts {
  std::vector<int> hidden = {256, 128};
  int epochs = 150;
  int batch_size = 64;
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
};

void add_data_options(CLI::App* cmd, DataOpts& o) {
  cmd->add_option("--data", o.csv, "Dataset CSV (one row per sample, final column = label)")
      ->required();
  cmd->add_option("--schema", o.schema, "JSON schema sidecar declaring k and feature domains")
      ->required();
}

void add_split_options(CLI::App* cmd, SplitOpts& o) {
  cmd->add_option("--train-size", o.train_size, "Training-set size for the threat-model split");
  cmd->add_option("--split-seed", o.split_seed, "Seed of the threat-model split");
}

void add_train_options(CLI::App* cmd, TrainOpts& o) {
  cmd->add_option("--hidden", o.hidden, "Hidden layer widths")->delimiter(',');
  cmd->add_option("--epochs", o.epochs, "Training epochs");
  cmd->add_option("--batch-size", o.batch_size, "Minibatch size");
  cmd->add_option("--lr", o.lr, "Initial learning rate");
  cmd->add_option("--momentum", o.momentum, "SGD momentum");
  cmd->add_option("--weight-decay", o.weight_decay, "L2 weight decay");
}

hb::TrainConfig to_train_config(const TrainOpts& o, uint64_t seed) {
  hb::TrainConfig cfg;
  cfg.hidden_dims = o.hidden;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch_size;
  cfg.optimizer.lr = o.lr;
  cfg.optimizer.momentum = o.momentum;
  cfg.optimizer.weight_decay = o.weight_decay;
  cfg.seed = seed;
  return cfg;
}

hb::Dataset load_data(const DataOpts& o) { return hb::load_csv_dataset(o.csv, o.schema); }

// Output paths may point into directories that don't exist yet (e.g. a fresh
// out/ tree); create them so every writer behaves like --out-dir does.
void ensure_parent_dir(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void write_json_file(const json& j, const std::string& path) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw hb::DataError("cannot write output file: " + path);
  out << j.dump(2) << '\n';
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw hb::DataError("cannot open file: " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw hb::DataError("invalid JSON in " + path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// synth-data
// ---------------------------------------------------------------------------

struct SynthOpts {
  std::string out_csv;
  std::string out_schema;
  int n = 4000;
  int d = 128;
  int k = 20;
  std::string mode = "binary";
  double flip_prob = 0.15;
  int subpatterns = 1;
  double spread = 0.0;
  double noise_sigma = 0.25;
  bool threshold_bits = false;
  uint64_t seed = 1;
};

int run_synth(const SynthOpts& o) {
  hb::SynthConfig cfg;
  cfg.n = o.n;
  cfg.d = o.d;
  cfg.k = o.k;
  if (o.mode == "binary")
    cfg.mode = hb::SynthMode::kBinary;
  else if (o.mode == "gaussian")
    cfg.mode = hb::SynthMode::kGaussian;
  else
    throw hb::ConfigError("unknown synthesis mode: \"" + o.mode + "\"");
  cfg.flip_prob = o.flip_prob;
  cfg.subpatterns_per_class = o.subpatterns;
  cfg.subpattern_spread = o.spread;
  cfg.noise_sigma = o.noise_sigma;
  cfg.threshold_bits = o.threshold_bits;
  cfg.seed = o.seed;
  const hb::Dataset ds = hb::synthesize_dataset(cfg);
  ensure_parent_dir(o.out_csv);
  ensure_parent_dir(o.out_schema);
  hb::save_csv_dataset(ds, o.out_csv, o.out_schema);
  std::cout << "wrote " << ds.n() << " samples (" << ds.dim() << " features, " << ds.k
            << " classes) to " << o.out_csv << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainCmdOpts {
  DataOpts data;
  SplitOpts split;
  TrainOpts train;
  std::string defense = "hamp";
  // Quickstart-calibrated defaults; gamma and alpha are dataset-specific in
  // general (see --grid-gammas/--grid-alphas for the built-in search).
  double gamma = 0.90;
  double alpha = 0.03;
  bool output_modification = true;
  double ls_intensity = 0.03;
  std::vector<int> early_stop_epochs;
  std::vector<double> grid_gammas;
  std::vector<double> grid_alphas;
  double grid_max_gap = 10.0;
  uint64_t seed = 1;
  std::string out_checkpoint;
  std::string out_report;
  std::string out_grid;
};

std::string with_suffix(const std::string& path, const std::string& suffix) {
  const fs::path p(path);
  fs::path out = p.parent_path() / (p.stem().string() + suffix + p.extension().string());
  return out.string();
}

int run_train(const TrainCmdOpts& o) {
  const hb::Dataset data = load_data(o.data);
  const hb::ThreatModelSplit split =
      hb::make_threat_split(data, o.split.train_size, o.split.split_seed);
  const hb::TrainConfig tc = to_train_config(o.train, o.seed);

  if (!o.grid_gammas.empty() || !o.grid_alphas.empty()) {
    if (o.defense != "hamp")
      throw hb::ConfigError("grid search applies to the hamp defense only");
    if (o.grid_gammas.empty() || o.grid_alphas.empty())
      throw hb::ConfigError("grid search needs both --grid-gammas and --grid-alphas");
    const hb::GridSearchResult grid =
        hb::grid_search(o.grid_gammas, o.grid_alphas, tc, data, split, o.grid_max_gap);
    json gj;
    gj["cells"] = json::array();
    for (const auto& c : grid.cells)
      gj["cells"].push_back({{"gamma", c.gamma},
                             {"alpha", c.alpha},
                             {"train_accuracy", c.train_accuracy},
                             {"val_accuracy", c.val_accuracy},
                             {"gap_points", c.gap_points}});
    gj["best_index"] = grid.best_index;
    gj["best"] = {{"gamma", grid.cells[static_cast<size_t>(grid.best_index)].gamma},
                  {"alpha", grid.cells[static_cast<size_t>(grid.best_index)].alpha}};
    if (o.out_grid.empty()) throw hb::ConfigError("grid search requires --out-grid");
    write_json_file(gj, o.out_grid);
    std::cout << "grid search: best gamma=" << gj["best"]["gamma"]
              << " alpha=" << gj["best"]["alpha"] << " over " << grid.cells.size()
              << " cells -> " << o.out_grid << "\n";
    if (!o.out_checkpoint.empty()) {
      hb::HampConfig best;
      best.train = tc;
      best.gamma = grid.cells[static_cast<size_t>(grid.best_index)].gamma;
      best.alpha = grid.cells[static_cast<size_t>(grid.best_index)].alpha;
      best.output_modification = o.output_modification;
      auto [dm, report] = hb::train_hamp(best, data, split);
      ensure_parent_dir(o.out_checkpoint);
      hb::save_checkpoint(dm, o.out_checkpoint);
      if (!o.out_report.empty()) write_json_file(hb::to_json(report), o.out_report);
    }
    return 0;
  }

  std::vector<std::pair<hb::DefendedModel, hb::TrainReport>> results;
  std::vector<std::string> suffixes;
  if (o.defense == "hamp") {
    hb::HampConfig cfg;
    cfg.train = tc;
    cfg.gamma = o.gamma;
    cfg.alpha = o.alpha;
    cfg.output_modification = o.output_modification;
    results.push_back(hb::train_hamp(cfg, data, split));
    suffixes.push_back("");
  } else if (o.defense == "undefended") {
    results.push_back(hb::train_undefended(tc, data, split));
    suffixes.push_back("");
  } else if (o.defense == "label_smoothing") {
    results.push_back(hb::train_baseline_ls(o.ls_intensity, tc, data, split));
    suffixes.push_back("");
  } else if (o.defense == "early_stop") {
    if (o.early_stop_epochs.empty())
      throw hb::ConfigError("early_stop requires --early-stop-epochs");
    results = hb::early_stop_checkpoints(tc, data, split, o.early_stop_epochs);
    for (int e : o.early_stop_epochs)
      suffixes.push_back(o.early_stop_epochs.size() == 1 ? ""
                                                         : "_epoch" + std::to_string(e));
  } else {
    throw hb::ConfigError("unknown defense: \"" + o.defense + "\"");
  }

  for (size_t i = 0; i < results.size(); ++i) {
    const auto& [dm, report] = results[i];
    if (!o.out_checkpoint.empty()) {
      const std::string ckpt_path = with_suffix(o.out_checkpoint, suffixes[i]);
      ensure_parent_dir(ckpt_path);
      hb::save_checkpoint(dm, ckpt_path);
    }
    if (!o.out_report.empty())
      write_json_file(hb::to_json(report), with_suffix(o.out_report, suffixes[i]));
    std::cout << hb::to_string(dm.defense_kind) << suffixes[i]
              << ": train=" << report.final_train_accuracy
              << " val=" << report.final_val_accuracy
              << " test=" << report.final_test_accuracy
              << " (epoch " << report.selected_epoch << ")\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// attack
// ---------------------------------------------------------------------------

struct AttackCmdOpts {
  DataOpts data;
  SplitOpts split;
  TrainOpts train;  // shadow-training procedure (lira)
  std::string checkpoint;
  std::vector<std::string> attacks = {"loss",        "confidence", "entropy",
                                      "modified_entropy", "nn",     "lira"};
  std::string out_dir = "out";
  uint64_t seed = 1;
  int shadows = 16;
  std::string variance_mode = "global";
  std::string shadow_dir;
  int noise_trials = 40;
  int noise_flips = 8;
  int aug_variants = 8;
  int aug_flips = 4;
  double ls_intensity = 0.03;
  int early_stop_epoch = 0;
};

hb::DefenseRecipe recipe_from_target(const hb::DefendedModel& dm, const hb::TrainConfig& tc,
                                     double ls_intensity, int early_stop_epoch) {
  hb::DefenseRecipe r;
  r.kind = dm.defense_kind;
  r.train = tc;
  r.gamma = dm.gamma;
  r.alpha = dm.alpha;
  r.output_modification = dm.output_modification_enabled;
  r.ls_intensity = ls_intensity;
  if (dm.defense_kind == hb::DefenseKind::kEarlyStop) {
    if (early_stop_epoch < 1)
      throw hb::ConfigError(
          "attacking an early-stop target requires --early-stop-epoch to describe its recipe");
    r.early_stop_epoch = early_stop_epoch;
  }
  return r;
}

int run_attack_cmd(const AttackCmdOpts& o) {
  const hb::Dataset data = load_data(o.data);
  const hb::ThreatModelSplit split =
      hb::make_threat_split(data, o.split.train_size, o.split.split_seed);
  const hb::DefendedModel target = hb::load_checkpoint(o.checkpoint);
  if (target.model.input_dim() != data.dim())
    throw hb::ConfigError("checkpoint input dimension does not match the dataset");

  hb::AttackSuiteConfig cfg;
  cfg.seed = o.seed;
  cfg.lira.num_shadows = o.shadows;
  if (o.variance_mode == "global")
    cfg.lira.variance_mode = hb::LiraVarianceMode::kGlobal;
  else if (o.variance_mode == "per_sample")
    cfg.lira.variance_mode = hb::LiraVarianceMode::kPerSample;
  else
    throw hb::ConfigError("unknown variance mode: \"" + o.variance_mode + "\"");
  cfg.lira.recipe = recipe_from_target(target, to_train_config(o.train, o.seed),
                                       o.ls_intensity, o.early_stop_epoch);
  cfg.lira.shadow_dir =
      o.shadow_dir.empty() ? (fs::path(o.out_dir) / "shadows").string() : o.shadow_dir;
  cfg.noise_trials = o.noise_trials;
  cfg.noise_flips = o.noise_flips;
  cfg.aug_variants = o.aug_variants;
  cfg.aug_flips = o.aug_flips;

  fs::create_directories(o.out_dir);
  json queries = json::object();
  for (const std::string& name : o.attacks) {
    const hb::AttackKind kind = hb::attack_kind_from_string(name);
    const hb::AttackRunResult run = hb::run_attack(kind, target, data, split, cfg);
    const std::string path =
        (fs::path(o.out_dir) / ("scores_" + run.scores.attack_name + ".csv")).string();
    hb::save_scores_csv(run.scores, path);
    queries[run.scores.attack_name] = run.target_queries;
    std::cout << run.scores.attack_name << ": " << run.scores.scores.size() << " scores, "
              << run.target_queries << " target queries -> " << path << "\n";
  }
  write_json_file(queries, (fs::path(o.out_dir) / "queries.json").string());
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateCmdOpts {
  std::vector<std::string> score_files;
  std::string scores_dir;
  std::vector<double> fpr_levels = {0.01, 0.005};
  std::vector<double> fnr_levels = {0.01, 0.005};
  std::string target_name = "target";
  std::string out;
  std::string roc_dir;
  // Optional: fills accuracy and entropy-gap blocks.
  std::string checkpoint;
  std::string data_csv;
  std::string data_schema;
  SplitOpts split;
  std::string baseline_report;
};

std::string attack_name_from_filename(const std::string& path) {
  std::string stem = fs::path(path).stem().string();
  if (stem.rfind("scores_", 0) == 0) stem = stem.substr(7);
  return stem;
}

int run_evaluate(const EvaluateCmdOpts& o) {
  std::vector<std::pair<std::string, std::string>> inputs;  // (name, path)
  for (const std::string& f : o.score_files) inputs.emplace_back(attack_name_from_filename(f), f);
  if (!o.scores_dir.empty()) {
    if (!fs::is_directory(o.scores_dir))
      throw hb::DataError("scores directory does not exist: " + o.scores_dir);
    std::vector<std::string> found;
    for (const auto& entry : fs::directory_iterator(o.scores_dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("scores_", 0) == 0 && entry.path().extension() == ".csv")
        found.push_back(entry.path().string());
    }
    std::sort(found.begin(), found.end());
    for (const std::string& f : found) inputs.emplace_back(attack_name_from_filename(f), f);
  }
  if (inputs.empty())
    throw hb::ConfigError("no score files given; use --scores and/or --scores-dir");

  hb::DefenseEvaluation ev;
  ev.target_name = o.target_name;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ev.train_accuracy = nan;
  ev.test_accuracy = nan;
  ev.entropy_gap.mean_member_entropy = nan;
  ev.entropy_gap.mean_nonmember_entropy = nan;
  ev.entropy_gap.difference = nan;

  if (!o.checkpoint.empty()) {
    if (o.data_csv.empty() || o.data_schema.empty())
      throw hb::ConfigError("--checkpoint needs --data and --schema to compute accuracy");
    const hb::Dataset data = hb::load_csv_dataset(o.data_csv, o.data_schema);
    const hb::ThreatModelSplit split =
        hb::make_threat_split(data, o.split.train_size, o.split.split_seed);
    const hb::DefendedModel dm = hb::load_checkpoint(o.checkpoint);
    ev.train_accuracy = hb::accuracy(dm.model, data, split.train_idx);
    ev.test_accuracy = hb::accuracy(dm.model, data, split.test_idx);
    ev.entropy_gap =
        hb::entropy_gap(dm.model, data, split.eval_member_idx, split.eval_nonmember_idx);
  }
  if (!o.baseline_report.empty()) {
    const json bj = read_json_file(o.baseline_report);
    hb::validate_report_json(bj);
    ev.baseline_name = bj["target"].get<std::string>();
    if (bj["accuracy"]["test"].is_number() && std::isfinite(ev.test_accuracy))
      ev.accuracy_delta = ev.test_accuracy - bj["accuracy"]["test"].get<double>();
  }

  // Optional query counts written next to the score files.
  json queries = json::object();
  if (!o.scores_dir.empty()) {
    const fs::path qp = fs::path(o.scores_dir) / "queries.json";
    if (fs::exists(qp)) queries = read_json_file(qp.string());
  }

  for (double lvl : o.fpr_levels) ev.max_tpr_at_fpr[lvl] = 0.0;
  for (double lvl : o.fnr_levels) ev.max_tnr_at_fnr[lvl] = 0.0;
  for (const auto& [name, path] : inputs) {
    hb::AttackEvaluation ae;
    ae.attack_name = name;
    try {
      const hb::MembershipScoreSet scores = hb::load_scores_csv(path, name);
      const hb::RocSummary rs = hb::roc(scores);
      ae.auc = rs.auc;
      for (double lvl : o.fpr_levels) ae.tpr_at_fpr[lvl] = hb::tpr_at_fpr(rs, lvl);
      for (double lvl : o.fnr_levels) ae.tnr_at_fnr[lvl] = hb::tnr_at_fnr(rs, lvl);
      if (queries.contains(name)) ae.target_queries = queries[name].get<long>();
      ae.ok = true;
      if (!o.roc_dir.empty()) {
        fs::create_directories(o.roc_dir);
        hb::save_roc_csv(rs, (fs::path(o.roc_dir) / ("roc_" + name + ".csv")).string());
      }
    } catch (const hb::Error& e) {
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

  const json report = hb::to_json(ev);
  hb::validate_report_json(report);
  if (!o.out.empty()) write_json_file(report, o.out);
  std::cout << "evaluated " << ev.attacks.size() << " attacks; max AUC = " << ev.max_auc
            << (o.out.empty() ? "" : " -> " + o.out) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

struct AblateCmdOpts {
  DataOpts data;
  SplitOpts split;
  TrainOpts train;
  double gamma = 0.90;
  double alpha = 0.03;
  std::vector<std::string> attacks = {"loss", "confidence", "entropy", "modified_entropy",
                                      "nn"};
  std::vector<double> fpr_levels = {0.01, 0.005};
  std::vector<double> fnr_levels = {0.01, 0.005};
  uint64_t seed = 1;
  int shadows = 16;
  std::string out_dir = "out/ablation";
};

int run_ablate(const AblateCmdOpts& o) {
  const hb::Dataset data = load_data(o.data);
  const hb::ThreatModelSplit split =
      hb::make_threat_split(data, o.split.train_size, o.split.split_seed);
  const hb::TrainConfig tc = to_train_config(o.train, o.seed);
  fs::create_directories(o.out_dir);

  struct Row {
    const char* name;
    bool soft, reg, mod;
  };
  const Row rows[] = {
      {"none", false, false, false},
      {"soft_labels", true, false, false},
      {"regularizer", false, true, false},
      {"output_modification", false, false, true},
      {"soft_labels+regularizer", true, true, false},
      {"soft_labels+output_modification", true, false, true},
      {"regularizer+output_modification", false, true, true},
      {"full", true, true, true},
  };

  std::vector<hb::AttackKind> kinds;
  for (const std::string& a : o.attacks) kinds.push_back(hb::attack_kind_from_string(a));

  json summary;
  summary["gamma"] = o.gamma;
  summary["alpha"] = o.alpha;
  summary["rows"] = json::array();
  for (const Row& row : rows) {
    hb::HampConfig cfg;
    cfg.train = tc;
    cfg.gamma = row.soft ? o.gamma : 0.0;
    cfg.alpha = row.reg ? o.alpha : 0.0;
    cfg.output_modification = row.mod;
    auto [dm, report] = hb::train_hamp(cfg, data, split);
    if (!row.soft && !row.reg && !row.mod) {
      // The empty lattice point is the undefended baseline; label it so.
      dm.defense_kind = hb::DefenseKind::kUndefended;
    }
    hb::save_checkpoint(dm, (fs::path(o.out_dir) / ("ckpt_" + std::string(row.name) + ".ckpt"))
                                .string());

    hb::AttackSuiteConfig suite;
    suite.seed = o.seed;
    suite.lira.num_shadows = o.shadows;
    suite.lira.recipe.kind = hb::DefenseKind::kHamp;
    suite.lira.recipe.train = tc;
    suite.lira.recipe.gamma = cfg.gamma;
    suite.lira.recipe.alpha = cfg.alpha;
    suite.lira.recipe.output_modification = cfg.output_modification;
    const hb::DefenseEvaluation ev =
        hb::evaluate_defense(dm, data, split, kinds, o.fpr_levels, o.fnr_levels, suite,
                             row.name);
    const json rj = hb::to_json(ev);
    hb::validate_report_json(rj);
    write_json_file(rj, (fs::path(o.out_dir) / ("report_" + std::string(row.name) + ".json"))
                            .string());

    json srow;
    srow["name"] = row.name;
    srow["components"] = {{"soft_labels", row.soft},
                          {"regularizer", row.reg},
                          {"output_modification", row.mod}};
    srow["test_accuracy"] = ev.test_accuracy;
    srow["max_auc"] = ev.max_auc;
    srow["max_tpr_at_fpr"] = rj["max_over_attacks"]["tpr_at_fpr"];
    srow["max_tnr_at_fnr"] = rj["max_over_attacks"]["tnr_at_fnr"];
    summary["rows"].push_back(srow);
    std::cout << row.name << ": test=" << ev.test_accuracy << " max_auc=" << ev.max_auc
              << "\n";
  }
  write_json_file(summary, (fs::path(o.out_dir) / "ablation.json").string());
  return 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

struct ReportCmdOpts {
  std::vector<std::string> inputs;
  std::string out;
};

int run_report(const ReportCmdOpts& o) {
  json combined;
  combined["targets"] = json::array();
  for (const std::string& path : o.inputs) {
    const json r = read_json_file(path);
    hb::validate_report_json(r);
    json t;
    t["source"] = fs::path(path).filename().string();
    t["target"] = r["target"];
    t["accuracy"] = r["accuracy"];
    t["max_over_attacks"] = r["max_over_attacks"];
    combined["targets"].push_back(t);
  }
  if (!o.out.empty()) write_json_file(combined, o.out);

  std::printf("%-24s %10s %10s %10s\n", "target", "test_acc", "max_auc", "tpr@lvls");
  for (const auto& t : combined["targets"]) {
    std::string tprs;
    for (const auto& [lvl, v] : t["max_over_attacks"]["tpr_at_fpr"].items()) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%s:%.4f ", lvl.c_str(), v.get<double>());
      tprs += buf;
    }
    const json& acc = t["accuracy"]["test"];
    std::printf("%-24s %10s %10.4f %s\n", t["target"].get<std::string>().c_str(),
                acc.is_number() ? std::to_string(acc.get<double>()).substr(0, 6).c_str() : "n/a",
                t["max_over_attacks"]["auc"].get<double>(), tprs.c_str());
  }
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
  CLI::App app{"Membership-inference attack/defense workbench"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file; command-line flags override it");

  SynthOpts synth;
  CLI::App* synth_cmd = app.add_subcommand("synth-data", "Generate a synthetic dataset");
  synth_cmd->add_option("--out-csv", synth.out_csv, "Output CSV path")->required();
  synth_cmd->add_option("--out-schema", synth.out_schema, "Output schema JSON path")->required();
  synth_cmd->add_option("--n", synth.n, "Number of samples");
  synth_cmd->add_option("--d", synth.d, "Number of features");
  synth_cmd->add_option("--k", synth.k, "Number of classes");
  synth_cmd->add_option("--mode", synth.mode, "binary | gaussian");
  synth_cmd->add_option("--flip-prob", synth.flip_prob, "Binary mode: per-bit flip probability");
  synth_cmd->add_option("--subpatterns", synth.subpatterns,
                        "Binary mode: sub-prototypes per class (1 = flat benchmark)");
  synth_cmd->add_option("--spread", synth.spread,
                        "Binary mode: per-bit flip probability from class prototype to sub-prototype");
  synth_cmd->add_option("--noise-sigma", synth.noise_sigma, "Gaussian mode: cluster noise");
  synth_cmd->add_flag("--threshold-bits", synth.threshold_bits,
                      "Gaussian mode: threshold features to bits");
  synth_cmd->add_option("--seed", synth.seed, "RNG seed")->envname("HAMPBENCH_SEED");

  TrainCmdOpts train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a target model");
  add_data_options(train_cmd, train.data);
  add_split_options(train_cmd, train.split);
  add_train_options(train_cmd, train.train);
  train_cmd->add_option("--defense", train.defense,
                        "hamp | undefended | label_smoothing | early_stop");
  train_cmd->add_option("--gamma", train.gamma, "Entropy threshold (fraction of ln k)");
  train_cmd->add_option("--alpha", train.alpha, "Entropy-regularizer strength");
  train_cmd->add_flag("--output-modification,!--no-output-modification",
                      train.output_modification, "Testing-time output modification (hamp)");
  train_cmd->add_option("--ls-intensity", train.ls_intensity, "Label-smoothing intensity");
  train_cmd->add_option("--early-stop-epochs", train.early_stop_epochs,
                        "Checkpoint epochs for early_stop")
      ->delimiter(',');
  train_cmd->add_option("--grid-gammas", train.grid_gammas, "Grid-search gamma values")
      ->delimiter(',');
  train_cmd->add_option("--grid-alphas", train.grid_alphas, "Grid-search alpha values")
      ->delimiter(',');
  train_cmd->add_option("--grid-max-gap", train.grid_max_gap,
                        "Max train-val gap (points) a grid cell may have");
  train_cmd->add_option("--seed", train.seed, "RNG seed")->envname("HAMPBENCH_SEED");
  train_cmd->add_option("--out-checkpoint", train.out_checkpoint, "Checkpoint output path");
  train_cmd->add_option("--out-report", train.out_report, "Training report JSON path");
  train_cmd->add_option("--out-grid", train.out_grid, "Grid-search table JSON path");

  AttackCmdOpts attack;
  CLI::App* attack_cmd = app.add_subcommand("attack", "Run attacks against a checkpoint");
  add_data_options(attack_cmd, attack.data);
  add_split_options(attack_cmd, attack.split);
  add_train_options(attack_cmd, attack.train);
  attack_cmd->add_option("--checkpoint", attack.checkpoint, "Target model checkpoint")
      ->required();
  attack_cmd->add_option("--attacks", attack.attacks,
                         "loss | confidence | entropy | modified_entropy | correctness | nn | "
                         "lira | boundary_noise | augmentation")
      ->delimiter(',');
  attack_cmd->add_option("--out-dir", attack.out_dir, "Directory for score CSVs");
  attack_cmd->add_option("--seed", attack.seed, "RNG seed")->envname("HAMPBENCH_SEED");
  attack_cmd->add_option("--shadows", attack.shadows, "LiRA shadow-model count");
  attack_cmd->add_option("--variance-mode", attack.variance_mode,
                         "LiRA variance: global | per_sample");
  attack_cmd->add_option("--shadow-dir", attack.shadow_dir,
                         "Shadow checkpoint directory (default <out-dir>/shadows)");
  attack_cmd->add_option("--noise-trials", attack.noise_trials, "Boundary attack: variants");
  attack_cmd->add_option("--noise-flips", attack.noise_flips, "Boundary attack: bits flipped");
  attack_cmd->add_option("--aug-variants", attack.aug_variants, "Augmentation attack: variants");
  attack_cmd->add_option("--aug-flips", attack.aug_flips,
                         "Augmentation attack: bits flipped per variant");
  attack_cmd->add_option("--ls-intensity", attack.ls_intensity,
                         "Shadow recipe: label-smoothing intensity");
  attack_cmd->add_option("--early-stop-epoch", attack.early_stop_epoch,
                         "Shadow recipe: early-stop epoch");

  EvaluateCmdOpts evaluate;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Compute metrics from score CSVs");
  eval_cmd->add_option("--scores", evaluate.score_files, "Score CSV paths")->delimiter(',');
  eval_cmd->add_option("--scores-dir", evaluate.scores_dir,
                       "Directory holding scores_<attack>.csv files");
  eval_cmd->add_option("--fpr-levels", evaluate.fpr_levels, "FPR levels for TPR readouts")
      ->delimiter(',');
  eval_cmd->add_option("--fnr-levels", evaluate.fnr_levels, "FNR levels for TNR readouts")
      ->delimiter(',');
  eval_cmd->add_option("--target-name", evaluate.target_name, "Name recorded in the report");
  eval_cmd->add_option("--out", evaluate.out, "Report JSON output path");
  eval_cmd->add_option("--roc-dir", evaluate.roc_dir, "Optional ROC CSV export directory");
  eval_cmd->add_option("--checkpoint", evaluate.checkpoint,
                       "Optional checkpoint for accuracy/entropy blocks");
  eval_cmd->add_option("--data", evaluate.data_csv, "Dataset CSV (with --checkpoint)");
  eval_cmd->add_option("--schema", evaluate.data_schema, "Schema JSON (with --checkpoint)");
  add_split_options(eval_cmd, evaluate.split);
  eval_cmd->add_option("--baseline-report", evaluate.baseline_report,
                       "Baseline report JSON for the accuracy delta");

  AblateCmdOpts ablate;
  CLI::App* ablate_cmd =
      app.add_subcommand("ablate", "Train and evaluate the defense-component lattice");
  add_data_options(ablate_cmd, ablate.data);
  add_split_options(ablate_cmd, ablate.split);
  add_train_options(ablate_cmd, ablate.train);
  ablate_cmd->add_option("--gamma", ablate.gamma, "Entropy threshold for soft-label rows");
  ablate_cmd->add_option("--alpha", ablate.alpha, "Regularizer strength for regularizer rows");
  ablate_cmd->add_option("--attacks", ablate.attacks, "Attack list for every row")
      ->delimiter(',');
  ablate_cmd->add_option("--fpr-levels", ablate.fpr_levels, "FPR levels")->delimiter(',');
  ablate_cmd->add_option("--fnr-levels", ablate.fnr_levels, "FNR levels")->delimiter(',');
  ablate_cmd->add_option("--seed", ablate.seed, "RNG seed")->envname("HAMPBENCH_SEED");
  ablate_cmd->add_option("--shadows", ablate.shadows, "LiRA shadow count (if lira listed)");
  ablate_cmd->add_option("--out-dir", ablate.out_dir, "Output directory");

  ReportCmdOpts report;
  CLI::App* report_cmd = app.add_subcommand("report", "Merge evaluation reports");
  report_cmd->add_option("inputs", report.inputs, "Report JSON files")->required();
  report_cmd->add_option("--out", report.out, "Combined JSON output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth);
    if (train_cmd->parsed()) return run_train(train);
    if (attack_cmd->parsed()) return run_attack_cmd(attack);
    if (eval_cmd->parsed()) return run_evaluate(evaluate);
    if (ablate_cmd->parsed()) return run_ablate(ablate);
    if (report_cmd->parsed()) return run_report(report);
    std::cerr << "error: no subcommand selected\n";
    return 2;
  } catch (const hb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const hb::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const hb::TrainingError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return 4;
  } catch (const hb::AttackError& e) {
    std::cerr << "attack error: " << e.what() << "\n";
    return 5;
  } catch (const hb::MetricError& e) {
    std::cerr << "metric error: " << e.what() << "\n";
    return 6;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
