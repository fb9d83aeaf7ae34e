// Copyright 2026 The attrinf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "attrinf/evaluation.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include "attrinf/blackbox.h"
#include "test_util.h"

namespace attrinf {
namespace {

AttackScoring Scoring(const std::vector<double>& v) {
  AttackScoring s;
  s.attack = "test";
  s.ids.resize(v.size());
  std::iota(s.ids.begin(), s.ids.end(), std::size_t{0});
  s.scores = Vector::Map(v.data(), static_cast<Eigen::Index>(v.size()));
  return s;
}

TEST(PpvAtK, Examples) {
  const AttackScoring s = Scoring({0.9, 0.8, 0.7, 0.6});
  const std::vector<int> labels = {1, 0, 1, 0};
  EXPECT_DOUBLE_EQ(PpvAtK(s, labels, 2), 0.5);
  const std::vector<int> all = {1, 1, 1, 1};
  for (std::size_t k = 1; k <= 4; ++k) EXPECT_DOUBLE_EQ(PpvAtK(s, all, k), 1.0);
  EXPECT_THROW(PpvAtK(s, labels, 0), AttackError);
  EXPECT_THROW(PpvAtK(s, labels, 5), AttackError);
}

TEST(PpvAtK, FullDepthIsBaseRateAndMatchesSort) {
  Rng rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution coin(0.3);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 10 + 19 * static_cast<std::size_t>(rep);
    std::vector<double> v(n);
    std::vector<int> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = std::round(u(rng) * 10) / 10;
      l[i] = coin(rng);
    }
    const AttackScoring s = Scoring(v);
    const double base = std::accumulate(l.begin(), l.end(), 0.0) / static_cast<double>(n);
    ASSERT_DOUBLE_EQ(PpvAtK(s, l, n), base);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    const std::size_t k = n / 3 + 1;
    double hits = 0.0;
    for (std::size_t i = 0; i < k; ++i) hits += l[order[i]];
    ASSERT_DOUBLE_EQ(PpvAtK(s, l, k), hits / static_cast<double>(k));
  }
}

TEST(PpvAtK, RandomScoresHitBaseRate) {
  SynthSpec spec;
  spec.num_records = 20000;
  spec.num_groups = 1;
  const SynthData s = SynthGenerate(spec, 2);
  double mean = 0.0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const CandidateSet c = SampleCandidates(s.data, 2000, seed);
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(c.size());
    for (double& x : v) x = u(rng);
    AttackScoring sc = Scoring(v);
    sc.ids = c.ids();
    mean += PpvAtK(sc, c.Indicator(spec.target), 100) / 40;
  }
  EXPECT_NEAR(mean, 0.28, 0.03);
}

TEST(Summarize, MeanAndPopulationStd) {
  EXPECT_FALSE(Summarize(std::vector<double>{}).has_value());
  const auto s = Summarize(std::vector{0.46, 0.54});
  ASSERT_TRUE(s);
  EXPECT_DOUBLE_EQ(s->mean, 0.5);
  EXPECT_NEAR(s->std, 0.04, 1e-12);
  EXPECT_EQ(FormatMeanStd(s), "0.50 ± 0.04");
  EXPECT_EQ(FormatMeanStd(std::nullopt), "NA");
}

TEST(PpvCurve, SeriesTable) {
  const PpvCurve c = MakePpvCurve("WB", "D-200", {10, 100}, {{0.5, 0.4}, {0.7, 0.2}});
  EXPECT_DOUBLE_EQ(c.mean[0], 0.6);
  EXPECT_DOUBLE_EQ(c.std[1], 0.1);
  std::ostringstream out;
  WritePpvSeries(out, std::vector{c});
  EXPECT_EQ(out.str(),
            "attack\tsetting\tk\tppv_mean\tppv_std\n"
            "WB\tD-200\t10\t0.6000\t0.1000\n"
            "WB\tD-200\t100\t0.3000\t0.1000\n");
  EXPECT_THROW(MakePpvCurve("WB", "x", {100, 10}, {}), AttackError);
}

TEST(AccuracyTable, OracleAndMostCommon) {
  // 62% of records hold value 1.
  std::vector<Record> rows;
  for (int i = 0; i < 100; ++i) {
    rows.push_back(testing::MakeRecord(i, i, i % 3, i < 62 ? 1 : 0, i % 2));
  }
  const Dataset d = testing::MakeDataset(testing::TinySchema(), rows);
  const CandidateSet c = AsCandidates(d);
  std::map<std::size_t, int> truth;
  for (const Record& r : d.records) truth[r.id] = r.sensitive;
  const AccuracyTable t = MakeAccuracyTable(
      {{"oracle", [&](const Record& r) { return truth.at(r.id); }}},
      MostCommonBaseline(d), {{"train", &c}, {"test", &c}});
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].first, "MostCommon");
  EXPECT_DOUBLE_EQ(t.rows[0].second[0], 0.62);
  EXPECT_DOUBLE_EQ(t.rows[1].second[1], 1.0);
  std::ostringstream out;
  WriteAccuracyTable(out, t);
  EXPECT_EQ(out.str(),
            "attack\ttrain\ttest\nMostCommon\t0.6200\t0.6200\n"
            "oracle\t1.0000\t1.0000\n");
}

TEST(AccuracyTable, WeightedCaiBeatsCai) {
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SynthData s = testing::SmallSynth(seed, 4000, 2.0);
    std::vector<std::size_t> a(2000), b(2000);
    std::iota(a.begin(), a.end(), std::size_t{0});
    std::iota(b.begin(), b.end(), std::size_t{2000});
    const Dataset train = s.data.Subset(a), aux = s.data.Subset(b);
    TargetTrainingOptions opt;
    opt.hidden_dims = {32};
    opt.train.epochs = 10;
    opt.train.seed = seed;
    const BlackBoxApi api(std::make_shared<TargetModel>(TrainTargetModel(train, opt)));
    ImputerConfig cfg;
    cfg.train.seed = seed;
    const Imputer imp = TrainImputer(aux, cfg);
    const CandidateSet c = SampleCandidates(train, 1000, seed);
    const double cai = AttackAccuracy(
        [&](const Record& r) { return CaiAttack(api, r, 2); }, c);
    const double wcai = AttackAccuracy(
        [&](const Record& r) { return WcaiAttack(api, imp, r); }, c);
    wins += wcai >= cai;
  }
  EXPECT_GE(wins, 4);
}

TEST(TrainVsTestPpv, SameSetHasNoGap) {
  const SynthData s = testing::SmallSynth(3, 500);
  const CandidateSet c = AsCandidates(s.data);
  const Imputer imp = TrainImputer(s.data, {});
  const TrainTestPpv r = TrainVsTestPpv(
      [&](const CandidateSet& cs) { return ImputationScores(imp, cs, 1); }, c, c,
      1, 50);
  EXPECT_EQ(r.gap(), 0.0);
}

TEST(VulnerableRegion, HandBuiltExample) {
  const std::vector<std::size_t> ids = {10, 11, 12, 13, 14};
  Vector imp(5), sig(5);
  imp << 0.1, 0.3, 0.5, 0.2, 0.0;
  sig << 0.95, 0.91, 0.99, 0.9, 0.5;
  const std::vector<int> labels = {1, 0, 1, 1, 1};
  const VulnerableRegionReport r = VulnerableRegion(ids, imp, sig, labels);
  EXPECT_EQ(r.total, 2u);
  EXPECT_EQ(r.true_sensitive, 1u);
  ASSERT_TRUE(r.ppv);
  EXPECT_DOUBLE_EQ(*r.ppv, 0.5);
  EXPECT_EQ(r.ids, (std::vector<std::size_t>{10, 11}));
  EXPECT_EQ(r.imputation_max, 0.3);
  EXPECT_EQ(r.signal_min, 0.9);
  std::ostringstream out;
  WriteRegionMembers(out, r, ids, imp, sig, labels);
  EXPECT_EQ(out.str(),
            "candidate_id\timputation\tsignal\tlabel\n10\t0.1\t0.95\t1\n"
            "11\t0.3\t0.91\t0\n");

  const VulnerableRegionReport none = VulnerableRegion(ids, imp, sig, labels, 0.3, 1.0);
  EXPECT_EQ(none.total, 0u);
  EXPECT_FALSE(none.ppv);
}

TEST(VulnerableRegion, MembershipFollowsPredicate) {
  Rng rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = 500;
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  Vector imp(n), sig(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    imp[static_cast<Eigen::Index>(i)] = u(rng);
    sig[static_cast<Eigen::Index>(i)] = u(rng);
    labels[i] = u(rng) < 0.3;
  }
  const VulnerableRegionReport r = VulnerableRegion(ids, imp, sig, labels);
  ASSERT_EQ(r.in_region.size(), n);
  std::size_t in = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    ASSERT_EQ(r.in_region[i], imp[k] <= 0.3 && sig[k] > 0.9);
    in += r.in_region[i];
  }
  EXPECT_EQ(in, r.total);
  EXPECT_THROW(VulnerableRegion(ids, imp.head(3), sig, labels), AttackError);
}

TEST(ReportTable, KeysColumnsAndAbsentCells) {
  ReportTable t({"phase", "attack"}, {"D-20", "D-200"});
  t.Set({"base", "WB"}, "D-20", MeanStd{0.5, 0.04, 5});
  t.Set({"dp", "WB"}, "D-200", MeanStd{0.25, 0.0, 5});
  t.Set({"base", "WB"}, "D-200", std::nullopt);
  std::ostringstream out;
  t.Write(out);
  EXPECT_EQ(out.str(),
            "phase\tattack\tD-20\tD-200\n"
            "base\tWB\t0.50 ± 0.04\tNA\n"
            "dp\tWB\tNA\t0.25 ± 0.00\n");
  EXPECT_THROW(t.Set({"base"}, "D-20", std::nullopt), Error);
  EXPECT_THROW(t.Set({"base", "WB"}, "D-2", std::nullopt), Error);
  EXPECT_FALSE(t.Get({"x", "y"}, "D-20"));
}

}  // namespace
}  // namespace attrinf
