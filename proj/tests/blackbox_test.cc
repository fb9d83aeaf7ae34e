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

#include "attrinf/blackbox.h"

#include <gtest/gtest.h>

#include <memory>
#include <sstream>

#include "attrinf/evaluation.h"
#include "test_util.h"

namespace attrinf {
namespace {

using testing::MakeDataset;
using testing::MakeRecord;
using testing::TinySchema;

std::shared_ptr<const AttributeSchema> SchemaWithClasses(int k) {
  auto s = std::make_shared<AttributeSchema>(*TinySchema());
  s->num_classes = k;
  return s;
}

Dataset SmallData(std::shared_ptr<const AttributeSchema> schema, int n,
                  std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(40.0, 10.0);
  std::uniform_int_distribution<int> color(0, 2), eth(0, 2),
      label(0, schema->num_classes - 1);
  std::vector<Record> rows;
  for (int i = 0; i < n; ++i) {
    rows.push_back(MakeRecord(static_cast<std::size_t>(i), normal(rng),
                              color(rng), eth(rng), label(rng)));
  }
  return MakeDataset(std::move(schema), rows);
}

std::shared_ptr<const TargetModel> ModelOn(const Dataset& data, bool zero,
                                           std::uint64_t seed = 1) {
  auto t = std::make_shared<TargetModel>();
  t->encoding = Encoding::Fit(data, {});
  MlpSpec spec{t->encoding.width(), {8, 5}, data.schema->num_classes};
  t->model = zero ? Mlp::Zeros(spec) : testing::RandomMlp(spec, seed);
  return t;
}

TEST(QueryConfidence, UniformModel) {
  for (int k : {2, 100}) {
    const Dataset d = SmallData(SchemaWithClasses(k), 50, 1);
    const BlackBoxApi api(ModelOn(d, true));
    for (const Record& r : d.records) {
      const ValueQuery q = QueryConfidence(api, r, 1);
      EXPECT_NEAR(q.v_true, 1.0 / k, 1e-15);
      EXPECT_NEAR(BbScore(api, r, 0), 1.0 / k, 1e-15);
      EXPECT_EQ(q.predicted, 0);
    }
  }
}

TEST(QueryConfidence, MatchesForwardPass) {
  const Dataset d = SmallData(TinySchema(), 100, 2);
  const auto target = ModelOn(d, false, 3);
  const BlackBoxApi api(target);
  for (const Record& r : d.records) {
    for (int t = 0; t < 3; ++t) {
      const Matrix p = target->model.PredictProba(target->encoding.Encode(r, t));
      const ValueQuery q = QueryConfidence(api, r, t);
      ASSERT_EQ(q.v_true, p(0, r.label));
      Eigen::Index arg;
      ASSERT_EQ(q.v_pred, p.row(0).maxCoeff(&arg));
      ASSERT_EQ(q.predicted, arg);
      ASSERT_GE(q.v_pred, q.v_true);
      ASSERT_GE(q.v_true, 0.0);
      ASSERT_LE(q.v_true, 1.0);
    }
  }
  const QueryTable table = QueryAllValues(api, d.records, 3);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (int t = 0; t < 3; ++t) {
      ASSERT_EQ(table[i][static_cast<std::size_t>(t)].v_true,
                QueryConfidence(api, d[i], t).v_true);
    }
  }
}

TEST(EstimateConfusion, RowsAreDistributions) {
  const Dataset d = SmallData(SchemaWithClasses(4), 200, 4);
  const BlackBoxApi api(ModelOn(d, false, 5));
  const ConfusionMatrix c = EstimateConfusion(api, d);
  for (int y = 0; y < 4; ++y) {
    if (c.support[static_cast<std::size_t>(y)] == 0) continue;
    EXPECT_NEAR(c.probs.row(y).sum(), 1.0, 1e-6);
    EXPECT_GE(c.probs.row(y).minCoeff(), 0.0);
  }
  const MembershipOracle o = CalibrateMembershipOracle(api, d);
  EXPECT_GE(o.threshold, 0.0);
  EXPECT_LE(o.threshold, 1.0);
}

ValueQuery Q(double v_true, int predicted, double v_pred) {
  return {v_true, predicted, v_pred};
}

Vector Vec(std::vector<double> v) {
  return Vector::Map(v.data(), static_cast<Eigen::Index>(v.size()));
}

TEST(Fredrikson, Examples) {
  ConfusionMatrix c;
  c.probs = Matrix{{0.9, 0.1}, {0.3, 0.7}};
  c.support = {10, 10};
  const std::vector<ValueQuery> q = {Q(0.6, 0, 0.6), Q(0.4, 1, 0.6)};
  const AttackDecision d = FredriksonDecide(c, Vec({0.5, 0.5}), q, 0);
  EXPECT_EQ(d.value, 0);
  EXPECT_FALSE(d.fallback);

  // Uniform confusion rows: the prior decides.
  ConfusionMatrix u;
  u.probs = Matrix::Constant(2, 2, 0.5);
  u.support = {10, 10};
  EXPECT_EQ(FredriksonDecide(u, Vec({0.3, 0.7}), q, 0).value, 1);
  EXPECT_EQ(FredriksonDecide(u, Vec({0.7, 0.3}), q, 1).value, 0);

  // No support for the label.
  c.support = {10, 0};
  const AttackDecision f = FredriksonDecide(c, Vec({0.2, 0.8}), q, 1);
  EXPECT_TRUE(f.fallback);
  EXPECT_EQ(f.value, 1);
}

TEST(Fredrikson, SevenValuesMatchEnumeration) {
  Rng rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, 2);
  for (int rep = 0; rep < 200; ++rep) {
    ConfusionMatrix c;
    c.probs = Matrix(3, 3);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) c.probs(i, j) = u(rng);
      c.probs.row(i) /= c.probs.row(i).sum();
    }
    c.support = {5, 5, 5};
    Vector prior(7);
    for (int t = 0; t < 7; ++t) prior[t] = u(rng);
    prior /= prior.sum();
    std::vector<ValueQuery> q;
    for (int t = 0; t < 7; ++t) q.push_back(Q(0.5, cls(rng), 0.5));
    const int y = cls(rng);
    int best = 0;
    for (int t = 1; t < 7; ++t) {
      const auto ti = static_cast<std::size_t>(t);
      if (prior[t] * c.probs(y, q[ti].predicted) >
          prior[best] * c.probs(y, q[static_cast<std::size_t>(best)].predicted)) {
        best = t;
      }
    }
    ASSERT_EQ(FredriksonDecide(c, prior, q, y).value, best);
  }
}

TEST(Yeom, Examples) {
  const MembershipOracle o{0.5};
  const Vector prior = Vec({0.2, 0.5, 0.3});
  // All pass: prior argmax.
  EXPECT_EQ(YeomDecide(o, prior, std::vector{Q(0.6, 0, 0.6), Q(0.7, 0, 0.7),
                                             Q(0.5, 0, 0.5)})
                .value,
            1);
  // One passes: that value.
  const AttackDecision one = YeomDecide(
      o, prior, std::vector{Q(0.9, 0, 0.9), Q(0.1, 1, 0.9), Q(0.2, 1, 0.8)});
  EXPECT_EQ(one.value, 0);
  EXPECT_FALSE(one.fallback);
  // None pass: flagged fallback.
  const AttackDecision none = YeomDecide(
      o, prior, std::vector{Q(0.1, 1, 0.9), Q(0.1, 1, 0.9), Q(0.2, 1, 0.8)});
  EXPECT_TRUE(none.fallback);
  EXPECT_EQ(none.value, 1);
}

TEST(Cai, TiesAndImputerZeros) {
  EXPECT_EQ(CaiDecide(std::vector{Q(0.4, 0, 0.6), Q(0.4, 0, 0.6)}), 0);
  EXPECT_EQ(CaiDecide(std::vector{Q(0.4, 0, 0.6), Q(0.7, 0, 0.7)}), 1);
  const std::vector q = {Q(0.9, 0, 0.9), Q(0.1, 1, 0.9), Q(0.2, 1, 0.8)};
  EXPECT_EQ(WcaiDecide(Vec({0.0, 0.6, 0.4}), q), 2);  // 0.08 beats 0.06
  EXPECT_EQ(WcaiDecide(Vec({0.0, 0.9, 0.1}), q), 1);
  EXPECT_EQ(WcaiDecide(Vec({0.0, 0.0, 0.0}), q), 0);
}

TEST(Cai, BinaryMatchesExhaustive) {
  Rng rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 500; ++rep) {
    const std::vector q = {Q(u(rng), 0, 1.0), Q(u(rng), 0, 1.0)};
    const double p = u(rng);
    EXPECT_EQ(CaiDecide(q), q[1].v_true > q[0].v_true ? 1 : 0);
    EXPECT_EQ(WcaiDecide(Vec({p, 1 - p}), q),
              (1 - p) * q[1].v_true > p * q[0].v_true ? 1 : 0);
  }
}

TEST(Cai, ArgmaxSurvivesThresholdDecision) {
  Rng rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<ValueQuery> q;
    AttackScoring s;
    for (int t = 0; t < 4; ++t) {
      q.push_back(Q(u(rng), 0, 1.0));
      s.ids.push_back(static_cast<std::size_t>(t));
    }
    s.scores = Vector(4);
    for (int t = 0; t < 4; ++t) s.scores[t] = q[static_cast<std::size_t>(t)].v_true;
    const int best = CaiDecide(q);
    const std::vector<int> hit = Decide(s, s.scores[best]);
    ASSERT_EQ(hit[static_cast<std::size_t>(best)], 1);
    ASSERT_EQ(std::count(hit.begin(), hit.end(), 1), 1);
  }
}

TEST(Csmia, Branches) {
  // y = 1; only value 0 predicts it.
  AttackDecision d = CsmiaDecide(std::vector{Q(0.6, 1, 0.6), Q(0.3, 0, 0.7)}, 1);
  EXPECT_EQ(d.value, 0);
  EXPECT_EQ(d.branch, CsmiaBranch::kUniqueMatch);
  d = CsmiaDecide(std::vector{Q(0.1, 0, 0.9), Q(0.4, 0, 0.6)}, 1);
  EXPECT_EQ(d.value, 1);
  EXPECT_EQ(d.branch, CsmiaBranch::kNoMatch);
  d = CsmiaDecide(std::vector{Q(0.7, 1, 0.7), Q(0.8, 1, 0.8)}, 1);
  EXPECT_EQ(d.value, 1);
  EXPECT_EQ(d.branch, CsmiaBranch::kAllMatch);
  d = CsmiaDecide(std::vector{Q(0.1, 0, 0.9), Q(0.6, 1, 0.6), Q(0.8, 1, 0.8)}, 1);
  EXPECT_EQ(d.value, 2);
  EXPECT_EQ(d.branch, CsmiaBranch::kMixedMatch);
}

TEST(Csmia, ExactlyOneBranchFires) {
  Rng rng(9);
  std::uniform_int_distribution<int> cls(0, 1);
  std::uniform_real_distribution<double> u(0.5, 1.0);
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<ValueQuery> q;
    int matches = 0;
    for (int t = 0; t < 3; ++t) {
      const int p = cls(rng);
      matches += p == 1;
      q.push_back(Q(0.5, p, u(rng)));
    }
    const AttackDecision d = CsmiaDecide(q, 1);
    const CsmiaBranch expected = matches == 1   ? CsmiaBranch::kUniqueMatch
                                 : matches == 0 ? CsmiaBranch::kNoMatch
                                 : matches == 3 ? CsmiaBranch::kAllMatch
                                                : CsmiaBranch::kMixedMatch;
    ASSERT_EQ(d.branch, expected);
    if (matches > 0) ASSERT_EQ(q[static_cast<std::size_t>(d.value)].predicted, 1);
  }
}

TEST(BbScores, ProductsAndPurity) {
  const Dataset d = SmallData(TinySchema(), 60, 10);
  const BlackBoxApi api(ModelOn(d, false, 11));
  const Imputer imp = TrainImputer(d, {});
  const CandidateSet c = AsCandidates(d);
  const AttackScoring bb = BbScores(api, c, 1);
  const AttackScoring bbip = BbIpScores(api, imp, c, 1);
  const Vector p = ImputeProbs(imp, c.partial, 1);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    ASSERT_EQ(bbip.scores[k], p[k] * bb.scores[k]);
    ASSERT_EQ(bb.scores[k], BbScore(api, c.partial[i], 1));
  }
  EXPECT_EQ(BbScores(api, c, 1).scores, bb.scores);
  EXPECT_DOUBLE_EQ(0.4 * 0.5, 0.2);

  std::vector<double> ones(d.size(), 1.0);
  const Vector aux_p = Vector::Map(ones.data(), static_cast<Eigen::Index>(ones.size()));
  const DecisionTree tree = FitConfidenceTree(api, aux_p, d, 1, {});
  const AttackScoring tree_scores = BbTreeScores(api, imp, tree, c, 1);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    ASSERT_EQ(tree_scores.scores[k], tree.Predict({p[k], bb.scores[k]}));
  }
  EXPECT_THROW(FitConfidenceTree(api, aux_p.head(3), d, 1, {}), AttackError);
}

TEST(BbScores, DegenerateImputerProbabilities) {
  std::vector<Record> rows;
  for (int i = 0; i < 20; ++i) rows.push_back(MakeRecord(i, i, i % 3, 2, i % 2));
  const Dataset d = MakeDataset(TinySchema(), rows);
  const BlackBoxApi api(ModelOn(d, false, 12));
  const Imputer imp = TrainImputer(d, {});
  const CandidateSet c = AsCandidates(d);
  EXPECT_EQ(BbIpScores(api, imp, c, 0).scores, Vector::Zero(20));
  EXPECT_EQ(BbIpScores(api, imp, c, 2).scores, BbScores(api, c, 2).scores);
}

TEST(WriteScoreTable, Format) {
  AttackScoring a;
  a.attack = "BB";
  a.ids = {4, 2};
  a.scores = Vec({0.25, 1.0});
  std::ostringstream out;
  WriteScoreTable(out, std::vector{a});
  EXPECT_EQ(out.str(), "candidate_id\tattack\tscore\n4\tBB\t0.25\n2\tBB\t1\n");
}

// V_y carries no information about t: the tree should fall back to
// ranking by imputation.
TEST(BbTreeScores, NoiseSignalTracksImputation) {
  double ip = 0.0, tree = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthSpec spec;
    spec.num_records = 9000;
    spec.num_groups = 1;
    spec.correlation = 1.5;
    spec.label_sensitive_weight = 0.0;
    const SynthData s = SynthGenerate(spec, seed);
    std::vector<std::size_t> train_idx, aux_idx;
    for (std::size_t i = 0; i < 5000; ++i) train_idx.push_back(i);
    for (std::size_t i = 5000; i < 9000; ++i) aux_idx.push_back(i);
    const Dataset train = s.data.Subset(train_idx);
    const Dataset aux = s.data.Subset(aux_idx);
    TargetTrainingOptions opt;
    opt.hidden_dims = {32};
    opt.train.epochs = 10;
    opt.train.seed = seed;
    const BlackBoxApi api(std::make_shared<TargetModel>(TrainTargetModel(train, opt)));
    ImputerConfig cfg;
    cfg.train.seed = seed;
    const Imputer imp = TrainImputer(aux, cfg);
    const DecisionTree t = FitConfidenceTree(
        api, CrossFittedProbs(aux, cfg, spec.target, 5), aux, spec.target, {});
    const CandidateSet c = SampleCandidates(train, 2000, seed);
    const auto labels = c.Indicator(spec.target);
    ip += PpvAtK(ImputationScores(imp, c, spec.target), labels, 100) / 5;
    tree += PpvAtK(BbTreeScores(api, imp, t, c, spec.target), labels, 100) / 5;
  }
  EXPECT_NEAR(tree, ip, 0.05);
}

}  // namespace
}  // namespace attrinf
