#include <algorithm>
#include <fstream>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "hampbench/data.hpp"
#include "hampbench/errors.hpp"
#include "hampbench/random.hpp"
#include "test_support.hpp"

namespace hb = hampbench;
namespace ts = testsupport;
namespace fs = std::filesystem;

namespace {

std::set<int> as_set(const std::vector<int>& v) { return std::set<int>(v.begin(), v.end()); }

bool disjoint(const std::vector<int>& a, const std::vector<int>& b) {
  const std::set<int> sa = as_set(a);
  for (int x : b)
    if (sa.count(x)) return false;
  return true;
}

}  // namespace

TEST(Synthesize, BinaryShapeLabelsAndDeterminism) {
  hb::SynthConfig cfg;
  cfg.n = 200;
  cfg.d = 16;
  cfg.k = 7;
  cfg.seed = 11;
  const hb::Dataset a = hb::synthesize_dataset(cfg);
  EXPECT_EQ(a.n(), 200);
  EXPECT_EQ(a.dim(), 16);
  EXPECT_EQ(a.k, 7);
  for (int i = 0; i < a.n(); ++i) EXPECT_EQ(a.labels[static_cast<size_t>(i)], i % 7);
  for (int c = 0; c < a.n(); ++c)
    for (int r = 0; r < a.dim(); ++r) {
      const double v = a.features(r, c);
      ASSERT_TRUE(v == 0.0 || v == 1.0);
    }
  EXPECT_NO_THROW(a.validate());

  const hb::Dataset b = hb::synthesize_dataset(cfg);
  EXPECT_TRUE(a.features == b.features);
  cfg.seed = 12;
  const hb::Dataset c = hb::synthesize_dataset(cfg);
  EXPECT_FALSE(a.features == c.features);
}

TEST(Synthesize, ZeroFlipYieldsPurePrototypes) {
  hb::SynthConfig cfg;
  cfg.n = 40;
  cfg.d = 12;
  cfg.k = 4;
  cfg.flip_prob = 0.0;
  cfg.seed = 3;
  const hb::Dataset ds = hb::synthesize_dataset(cfg);
  // Same-class samples must be identical copies of the prototype.
  for (int i = 0; i < ds.n(); ++i)
    for (int j = 0; j < ds.n(); ++j)
      if (ds.labels[static_cast<size_t>(i)] == ds.labels[static_cast<size_t>(j)])
        ASSERT_TRUE(ds.features.col(i) == ds.features.col(j));
}

TEST(Synthesize, FlipRateRoughlyRealized) {
  hb::SynthConfig base;
  base.n = 400;
  base.d = 64;
  base.k = 4;
  base.flip_prob = 0.0;
  base.seed = 5;
  const hb::Dataset clean = hb::synthesize_dataset(base);
  base.flip_prob = 0.25;
  const hb::Dataset noisy = hb::synthesize_dataset(base);
  long flips = 0, total = 0;
  for (int c = 0; c < clean.n(); ++c)
    for (int r = 0; r < clean.dim(); ++r) {
      total += 1;
      if (clean.features(r, c) != noisy.features(r, c)) flips += 1;
    }
  const double rate = static_cast<double>(flips) / static_cast<double>(total);
  EXPECT_NEAR(rate, 0.25, 0.02);
}

TEST(Synthesize, SubpatternsBoundDistinctRowsPerClass) {
  // With zero per-sample noise every sample is one of its class's
  // sub-prototypes, so a class can show at most subpatterns_per_class
  // distinct feature vectors — and with a generous sample count and a wide
  // spread it shows all of them.
  hb::SynthConfig cfg;
  cfg.n = 600;
  cfg.d = 48;
  cfg.k = 3;
  cfg.flip_prob = 0.0;
  cfg.subpatterns_per_class = 4;
  cfg.subpattern_spread = 0.3;
  cfg.seed = 21;
  const hb::Dataset ds = hb::synthesize_dataset(cfg);
  for (int cls = 0; cls < cfg.k; ++cls) {
    std::set<std::vector<double>> rows;
    for (int i = 0; i < ds.n(); ++i) {
      if (ds.labels[static_cast<size_t>(i)] != cls) continue;
      std::vector<double> row(static_cast<size_t>(ds.dim()));
      for (int r = 0; r < ds.dim(); ++r) row[static_cast<size_t>(r)] = ds.features(r, i);
      rows.insert(std::move(row));
    }
    EXPECT_EQ(static_cast<int>(rows.size()), cfg.subpatterns_per_class);
  }

  const hb::Dataset again = hb::synthesize_dataset(cfg);
  EXPECT_TRUE(ds.features == again.features);
}

TEST(Synthesize, SubpatternSpreadRealizedBetweenSubPrototypes) {
  // Two sub-prototypes of one class are independent spread-flips of the same
  // prototype, so they disagree on a bit iff exactly one flip fired:
  // expected Hamming distance = 2 * s * (1 - s) * d.
  hb::SynthConfig cfg;
  cfg.n = 64;
  cfg.d = 4096;
  cfg.k = 2;
  cfg.flip_prob = 0.0;
  cfg.subpatterns_per_class = 2;
  cfg.subpattern_spread = 0.25;
  cfg.seed = 33;
  const hb::Dataset ds = hb::synthesize_dataset(cfg);
  for (int cls = 0; cls < cfg.k; ++cls) {
    std::set<std::vector<double>> rows;
    for (int i = 0; i < ds.n(); ++i) {
      if (ds.labels[static_cast<size_t>(i)] != cls) continue;
      std::vector<double> row(static_cast<size_t>(ds.dim()));
      for (int r = 0; r < ds.dim(); ++r) row[static_cast<size_t>(r)] = ds.features(r, i);
      rows.insert(std::move(row));
    }
    ASSERT_EQ(rows.size(), 2u);
    const auto& a = *rows.begin();
    const auto& b = *std::next(rows.begin());
    long dist = 0;
    for (size_t r = 0; r < a.size(); ++r)
      if (a[r] != b[r]) dist += 1;
    const double expected = 2.0 * 0.25 * 0.75 * static_cast<double>(cfg.d);
    // Binomial(d, 2s(1-s)) std dev is ~31 bits at d=4096; allow 4 sigma.
    EXPECT_NEAR(static_cast<double>(dist), expected, 125.0);
  }
}

TEST(Synthesize, SingleSubpatternCollapsesToOneRowPerClass) {
  hb::SynthConfig cfg;
  cfg.n = 60;
  cfg.d = 24;
  cfg.k = 3;
  cfg.flip_prob = 0.0;
  cfg.subpatterns_per_class = 1;
  cfg.subpattern_spread = 0.4;
  cfg.seed = 7;
  const hb::Dataset ds = hb::synthesize_dataset(cfg);
  for (int i = 0; i < ds.n(); ++i)
    for (int j = 0; j < ds.n(); ++j)
      if (ds.labels[static_cast<size_t>(i)] == ds.labels[static_cast<size_t>(j)])
        ASSERT_TRUE(ds.features.col(i) == ds.features.col(j));
}

TEST(Synthesize, GaussianModes) {
  hb::SynthConfig cfg;
  cfg.n = 60;
  cfg.d = 8;
  cfg.k = 3;
  cfg.mode = hb::SynthMode::kGaussian;
  cfg.seed = 9;
  const hb::Dataset ds = hb::synthesize_dataset(cfg);
  for (int c = 0; c < ds.n(); ++c)
    for (int r = 0; r < ds.dim(); ++r) {
      ASSERT_GE(ds.features(r, c), 0.0);
      ASSERT_LE(ds.features(r, c), 1.0);
    }
  EXPECT_EQ(ds.domain.features[0].kind, hb::FeatureKind::kInterval);

  cfg.threshold_bits = true;
  const hb::Dataset bits = hb::synthesize_dataset(cfg);
  EXPECT_EQ(bits.domain.features[0].kind, hb::FeatureKind::kBinary);
  for (int c = 0; c < bits.n(); ++c)
    for (int r = 0; r < bits.dim(); ++r)
      ASSERT_TRUE(bits.features(r, c) == 0.0 || bits.features(r, c) == 1.0);
}

TEST(Synthesize, RejectsBadConfig) {
  hb::SynthConfig cfg;
  cfg.k = 1;
  EXPECT_THROW(hb::synthesize_dataset(cfg), hb::ConfigError);
  cfg.k = 5;
  cfg.n = 3;
  EXPECT_THROW(hb::synthesize_dataset(cfg), hb::ConfigError);
  cfg.n = 100;
  cfg.flip_prob = 1.5;
  EXPECT_THROW(hb::synthesize_dataset(cfg), hb::ConfigError);
  cfg.flip_prob = 0.1;
  cfg.subpatterns_per_class = 0;
  EXPECT_THROW(hb::synthesize_dataset(cfg), hb::ConfigError);
  cfg.subpatterns_per_class = 2;
  cfg.subpattern_spread = 0.6;
  EXPECT_THROW(hb::synthesize_dataset(cfg), hb::ConfigError);
  cfg.subpattern_spread = 0.2;
  cfg.mode = hb::SynthMode::kGaussian;
  EXPECT_THROW(hb::synthesize_dataset(cfg), hb::ConfigError);
}

TEST(CsvRoundTrip, ExactForBinaryAndInterval) {
  const fs::path dir = ts::test_tmpdir("csv_roundtrip");
  for (const bool gaussian : {false, true}) {
    hb::SynthConfig cfg;
    cfg.n = 50;
    cfg.d = 6;
    cfg.k = 3;
    cfg.mode = gaussian ? hb::SynthMode::kGaussian : hb::SynthMode::kBinary;
    cfg.seed = 21;
    const hb::Dataset ds = hb::synthesize_dataset(cfg);
    const std::string csv = (dir / (gaussian ? "g.csv" : "b.csv")).string();
    const std::string schema = (dir / (gaussian ? "g.json" : "b.json")).string();
    hb::save_csv_dataset(ds, csv, schema);
    const hb::Dataset back = hb::load_csv_dataset(csv, schema);
    EXPECT_EQ(back.k, ds.k);
    EXPECT_EQ(back.labels, ds.labels);
    ASSERT_EQ(back.features.rows(), ds.features.rows());
    ASSERT_EQ(back.features.cols(), ds.features.cols());
    // %.17g serialization must round-trip doubles bitwise.
    for (int c = 0; c < ds.n(); ++c)
      for (int r = 0; r < ds.dim(); ++r)
        ASSERT_EQ(back.features(r, c), ds.features(r, c)) << "r=" << r << " c=" << c;
  }
}

TEST(CsvRoundTrip, ByteIdenticalResave) {
  const fs::path dir = ts::test_tmpdir("csv_resave");
  const hb::Dataset ds = ts::tiny_synth(30, 5, 3, 0.2, 4);
  hb::save_csv_dataset(ds, (dir / "a.csv").string(), (dir / "a.json").string());
  const hb::Dataset back =
      hb::load_csv_dataset((dir / "a.csv").string(), (dir / "a.json").string());
  hb::save_csv_dataset(back, (dir / "b.csv").string(), (dir / "b.json").string());
  EXPECT_EQ(ts::read_file_bytes((dir / "a.csv").string()),
            ts::read_file_bytes((dir / "b.csv").string()));
  EXPECT_EQ(ts::read_file_bytes((dir / "a.json").string()),
            ts::read_file_bytes((dir / "b.json").string()));
}

TEST(CsvLoad, HeaderOptionalStrictErrorsOtherwise) {
  const fs::path dir = ts::test_tmpdir("csv_load");
  const std::string schema = (dir / "s.json").string();
  hb::save_schema(2, hb::InputDomain::all_binary(2), schema);

  {
    std::ofstream f(dir / "noheader.csv");
    f << "1,0,1\n0,1,0\n";
  }
  const hb::Dataset ds = hb::load_csv_dataset((dir / "noheader.csv").string(), schema);
  EXPECT_EQ(ds.n(), 2);
  EXPECT_EQ(ds.labels[0], 1);
  EXPECT_EQ(ds.labels[1], 0);

  {
    std::ofstream f(dir / "header.csv");
    f << "f0,f1,label\n1,0,1\n0,1,0\n";
  }
  const hb::Dataset ds2 = hb::load_csv_dataset((dir / "header.csv").string(), schema);
  EXPECT_EQ(ds2.n(), 2);

  {
    std::ofstream f(dir / "badcols.csv");
    f << "1,0,1\n1,0\n";
  }
  EXPECT_THROW(hb::load_csv_dataset((dir / "badcols.csv").string(), schema), hb::DataError);

  {
    std::ofstream f(dir / "badlabel.csv");
    f << "1,0,7\n";  // label out of range for k=2
  }
  EXPECT_THROW(hb::load_csv_dataset((dir / "badlabel.csv").string(), schema), hb::DataError);

  {
    std::ofstream f(dir / "badvalue.csv");
    f << "1,0.5,1\n";  // 0.5 violates the binary feature domain
  }
  EXPECT_THROW(hb::load_csv_dataset((dir / "badvalue.csv").string(), schema), hb::DataError);

  {
    std::ofstream f(dir / "garbage.csv");
    f << "1,zebra,1\n";
  }
  EXPECT_THROW(hb::load_csv_dataset((dir / "garbage.csv").string(), schema), hb::DataError);

  EXPECT_THROW(hb::load_csv_dataset((dir / "missing.csv").string(), schema), hb::DataError);
}

TEST(CsvLoad, ErrorsNameTheLine) {
  const fs::path dir = ts::test_tmpdir("csv_lines");
  const std::string schema = (dir / "s.json").string();
  hb::save_schema(2, hb::InputDomain::all_binary(1), schema);
  {
    std::ofstream f(dir / "bad.csv");
    f << "1,1\n1,1\nbroken,0\n";
  }
  try {
    hb::load_csv_dataset((dir / "bad.csv").string(), schema);
    FAIL() << "expected DataError";
  } catch (const hb::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos)
        << "message should name line 3: " << e.what();
  }
}

TEST(Schema, RoundTripAndValidation) {
  const fs::path dir = ts::test_tmpdir("schema");
  hb::InputDomain dom;
  dom.features.push_back(hb::FeatureDomain::binary());
  dom.features.push_back(hb::FeatureDomain::interval(-1.0, 2.5));
  const std::string path = (dir / "schema.json").string();
  hb::save_schema(4, dom, path);
  const auto [k, back] = hb::load_schema(path);
  EXPECT_EQ(k, 4);
  ASSERT_EQ(back.dim(), 2);
  EXPECT_EQ(back.features[0].kind, hb::FeatureKind::kBinary);
  EXPECT_EQ(back.features[1].kind, hb::FeatureKind::kInterval);
  EXPECT_DOUBLE_EQ(back.features[1].lo, -1.0);
  EXPECT_DOUBLE_EQ(back.features[1].hi, 2.5);

  EXPECT_THROW(hb::FeatureDomain::interval(2.0, 1.0), hb::ConfigError);
  {
    std::ofstream f(dir / "bad.json");
    f << "{\"k\": 1, \"features\": []}";
  }
  EXPECT_THROW(hb::load_schema((dir / "bad.json").string()), hb::DataError);
}

TEST(ThreatSplit, SizesDisjointnessAndCoverage) {
  const hb::Dataset ds = ts::tiny_synth(500, 8, 5, 0.2, 13);
  const int train_size = 120;
  const hb::ThreatModelSplit s = hb::make_threat_split(ds, train_size, 99);

  EXPECT_EQ(static_cast<int>(s.train_idx.size()), train_size);
  EXPECT_EQ(static_cast<int>(s.adv_member_idx.size()), train_size / 2);
  EXPECT_EQ(static_cast<int>(s.eval_member_idx.size()), train_size - train_size / 2);
  EXPECT_EQ(s.adv_nonmember_idx.size(), s.adv_member_idx.size());
  EXPECT_EQ(s.eval_nonmember_idx.size(), s.eval_member_idx.size());
  EXPECT_EQ(static_cast<int>(s.val_idx.size()), train_size / 10);
  EXPECT_GE(s.test_idx.size(), 1u);

  // Members partition into the adversary-known and evaluation halves.
  std::set<int> members = as_set(s.adv_member_idx);
  for (int i : s.eval_member_idx) EXPECT_TRUE(members.insert(i).second);
  EXPECT_EQ(members, as_set(s.train_idx));

  // All non-member sets are pairwise disjoint and disjoint from train.
  const std::vector<const std::vector<int>*> outside = {&s.val_idx, &s.adv_nonmember_idx,
                                                        &s.eval_nonmember_idx, &s.test_idx};
  for (size_t i = 0; i < outside.size(); ++i) {
    EXPECT_TRUE(disjoint(*outside[i], s.train_idx));
    for (size_t j = i + 1; j < outside.size(); ++j)
      EXPECT_TRUE(disjoint(*outside[i], *outside[j]));
  }

  // Coverage: every sample lands in exactly one bucket.
  size_t total = s.train_idx.size() + s.val_idx.size() + s.adv_nonmember_idx.size() +
                 s.eval_nonmember_idx.size() + s.test_idx.size();
  EXPECT_EQ(total, static_cast<size_t>(ds.n()));

  // Deterministic per seed.
  const hb::ThreatModelSplit s2 = hb::make_threat_split(ds, train_size, 99);
  EXPECT_EQ(s.train_idx, s2.train_idx);
  EXPECT_EQ(s.adv_member_idx, s2.adv_member_idx);
  const hb::ThreatModelSplit s3 = hb::make_threat_split(ds, train_size, 100);
  EXPECT_NE(s.train_idx, s3.train_idx);
}

TEST(ThreatSplit, TooSmallDatasetNamesTheShortSet) {
  const hb::Dataset ds = ts::tiny_synth(100, 4, 2, 0.1, 1);
  // train 60 + val 6 + adv_nm 30 + eval_nm 30 > 100 -> fails at adversary
  // non-members.
  try {
    hb::make_threat_split(ds, 60, 1);
    FAIL() << "expected DataError";
  } catch (const hb::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("non-member"), std::string::npos) << e.what();
  }
  EXPECT_THROW(hb::make_threat_split(ds, 1, 1), hb::ConfigError);
}

TEST(GenRandomInput, RespectsDomain) {
  hb::InputDomain dom;
  dom.features.push_back(hb::FeatureDomain::binary());
  dom.features.push_back(hb::FeatureDomain::interval(2.0, 3.0));
  hb::Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    const hb::VectorXd x = hb::gen_random_input(dom, rng);
    ASSERT_TRUE(x[0] == 0.0 || x[0] == 1.0);
    ASSERT_GE(x[1], 2.0);
    ASSERT_LT(x[1], 3.0);
  }
}

TEST(GatherHelpers, SelectColumnsAndLabels) {
  const hb::Dataset ds = ts::tiny_synth(10, 3, 2, 0.3, 2);
  const std::vector<int> idx = {7, 0, 3};
  const hb::MatrixXd g = hb::gather_columns(ds.features, idx);
  ASSERT_EQ(g.cols(), 3);
  EXPECT_TRUE(g.col(0) == ds.features.col(7));
  EXPECT_TRUE(g.col(1) == ds.features.col(0));
  EXPECT_TRUE(g.col(2) == ds.features.col(3));
  const std::vector<int> lbl = hb::gather_labels(ds.labels, idx);
  EXPECT_EQ(lbl[0], ds.labels[7]);
  EXPECT_EQ(lbl[1], ds.labels[0]);
  EXPECT_EQ(lbl[2], ds.labels[3]);
}

TEST(DatasetValidate, CatchesInconsistencies) {
  hb::Dataset ds = ts::tiny_synth(10, 3, 2, 0.3, 2);
  ds.labels[0] = 5;  // out of range
  EXPECT_THROW(ds.validate(), hb::DataError);
  ds.labels[0] = 0;
  ds.features(0, 0) = 0.5;  // violates binary domain
  EXPECT_THROW(ds.validate(), hb::DataError);
}
