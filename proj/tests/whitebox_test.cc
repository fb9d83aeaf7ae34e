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

#include "attrinf/whitebox.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include "oracles.h"
#include "test_util.h"

namespace attrinf {
namespace {

std::shared_ptr<TargetModel> ModelOn(const Dataset& data,
                                     std::vector<int> hidden, bool zero,
                                     std::uint64_t seed) {
  auto t = std::make_shared<TargetModel>();
  t->encoding = Encoding::Fit(data, {});
  MlpSpec spec{t->encoding.width(), std::move(hidden), data.schema->num_classes};
  t->model = zero ? Mlp::Zeros(spec) : testing::RandomMlp(spec, seed);
  return t;
}

TEST(CollectActivations, ZeroModelAndForwardOracle) {
  const SynthData s = testing::SmallSynth(1, 40);
  const WhiteBoxApi zero(ModelOn(s.data, {6, 4}, true, 0));
  EXPECT_TRUE(CollectActivations(zero, s.data.records).isZero());

  const auto target = ModelOn(s.data, {6, 4}, false, 2);
  const WhiteBoxApi api(target);
  const Matrix all = CollectActivations(api, s.data.records, 1);
  ASSERT_EQ(all.cols(), 10);
  for (std::size_t i = 0; i < 5; ++i) {
    const ActivationTrace tr =
        target->model.Forward(target->encoding.Encode(s.data[i], 1).transpose());
    const auto r = static_cast<Eigen::Index>(i);
    // Batch products may sum in a different order than the single-row path.
    for (int j = 0; j < 6; ++j) ASSERT_NEAR(all(r, j), tr.hidden[0][j], 1e-12);
    for (int j = 0; j < 4; ++j) ASSERT_NEAR(all(r, 6 + j), tr.hidden[1][j], 1e-12);
    const Matrix one = CollectActivations(
        api, std::span<const Record>(&s.data.records[i], 1), 1);
    for (int j = 0; j < 6; ++j) ASSERT_NEAR(one(0, j), tr.hidden[0][j], 1e-12);
  }
  EXPECT_EQ(api.layer_sizes(), (std::vector<int>{6, 4}));
}

TEST(QuantileScaler, EmpiricalCdf) {
  Matrix ref(4, 2);
  ref << 1, 7, 2, 7, 3, 7, 4, 7;
  const QuantileScaler q = QuantileScaler::Fit(ref);
  EXPECT_DOUBLE_EQ(q.Scale(2.0, 0), 0.5);
  EXPECT_DOUBLE_EQ(q.Scale(0.0, 0), 0.0);
  EXPECT_DOUBLE_EQ(q.Scale(4.0, 0), 1.0);
  EXPECT_DOUBLE_EQ(q.Scale(9.0, 0), 1.0);
  EXPECT_TRUE(q.constant(1));
  EXPECT_DOUBLE_EQ(q.Scale(100.0, 1), 0.5);
  EXPECT_THROW(q.Transform(Matrix::Zero(2, 3)), AttackError);
  EXPECT_THROW(QuantileScaler::Fit(Matrix(0, 2)), AttackError);
}

TEST(QuantileScaler, MonotoneInRawValue) {
  const Matrix ref = testing::RandomMatrix(50, 3, 3);
  const QuantileScaler q = QuantileScaler::Fit(ref);
  for (Eigen::Index j = 0; j < 3; ++j) {
    double prev = -1.0;
    for (double v = -3.0; v <= 3.0; v += 0.01) {
      const double s = q.Scale(v, j);
      ASSERT_GE(s, prev);
      ASSERT_GE(s, 0.0);
      ASSERT_LE(s, 1.0);
      prev = s;
    }
  }
}

TEST(Pearson, Examples) {
  EXPECT_DOUBLE_EQ(Pearson(std::vector{0.0, 1.0}, std::vector{0.0, 1.0}).rho, 1.0);
  EXPECT_NEAR(Pearson(std::vector{1.0, 2.0, 3.0, 4.0},
                      std::vector{0.0, 0.0, 1.0, 1.0}).rho,
              2.0 / std::sqrt(5.0), 1e-12);
  const PearsonResult flat =
      Pearson(std::vector{2.0, 2.0, 2.0}, std::vector{0.0, 1.0, 1.0});
  EXPECT_TRUE(flat.constant);
  EXPECT_EQ(flat.rho, 0.0);
  EXPECT_THROW(Pearson(std::vector{1.0}, std::vector{1.0}), AttackError);
}

TEST(Pearson, MatchesTwoPassFormula) {
  Rng rng(4);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.4);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> x(30), y(30);
    for (std::size_t i = 0; i < 30; ++i) {
      x[i] = normal(rng);
      y[i] = coin(rng);
    }
    y[0] = 0.0;
    y[1] = 1.0;
    ASSERT_NEAR(Pearson(x, y).rho, oracle::Pearson(x, y), 1e-12);
  }
}

TEST(SelectNeurons, RanksMatchBruteForceAndAreStable) {
  const Matrix scaled = testing::RandomMatrix(60, 12, 5).cwiseAbs();
  Rng rng(6);
  std::bernoulli_distribution coin(0.5);
  std::vector<int> labels(60);
  for (int& l : labels) l = coin(rng);
  const std::vector<int> sizes = {8, 4};
  const NeuronSelection a = SelectNeurons(scaled, labels, sizes, 3);
  const NeuronSelection b = SelectNeurons(scaled, labels, sizes, 3);
  ASSERT_EQ(a.ranked.size(), 12u);
  std::vector<double> y(labels.begin(), labels.end());
  for (const NeuronScore& n : a.ranked) {
    std::vector<double> x(60);
    for (Eigen::Index i = 0; i < 60; ++i) x[static_cast<std::size_t>(i)] = scaled(i, n.column);
    ASSERT_NEAR(n.rho, oracle::Pearson(x, y), 1e-12);
    ASSERT_EQ(n.column, n.layer == 0 ? n.index : 8 + n.index);
  }
  for (std::size_t i = 1; i < a.ranked.size(); ++i) {
    ASSERT_GE(a.ranked[i - 1].rho, a.ranked[i].rho);
  }
  ASSERT_EQ(a.selected.size(), b.selected.size());
  for (std::size_t i = 0; i < a.selected.size(); ++i) {
    EXPECT_EQ(a.selected[i].column, b.selected[i].column);
    EXPECT_EQ(a.selected[i].rho, b.selected[i].rho);
    EXPECT_GT(a.selected[i].rho, 0.0);
  }
}

TEST(SelectNeurons, ShortAndEmptySelections) {
  Matrix scaled(4, 3);
  // Column 0 correlates positively, 1 negatively, 2 is constant.
  scaled << 0.1, 0.9, 0.5, 0.2, 0.8, 0.5, 0.7, 0.3, 0.5, 0.9, 0.1, 0.5;
  const std::vector<int> labels = {0, 0, 1, 1};
  const std::vector<int> sizes = {3};
  const NeuronSelection s = SelectNeurons(scaled, labels, sizes, 10);
  ASSERT_EQ(s.selected.size(), 1u);
  EXPECT_EQ(s.selected[0].column, 0);
  EXPECT_TRUE(s.short_selection());
  const NeuronScore& flat = *std::find_if(
      s.ranked.begin(), s.ranked.end(), [](const NeuronScore& n) { return n.column == 2; });
  EXPECT_TRUE(flat.constant);
  EXPECT_THROW(SelectNeurons(scaled.rightCols(2), labels, std::vector<int>{2}, 10),
               AttackError);
  EXPECT_THROW(SelectNeurons(scaled, labels, std::vector<int>{2}, 10), AttackError);
}

TEST(AggregateOutput, WeightedMean) {
  EXPECT_NEAR(AggregateOutput(std::vector{0.4, 0.2}, std::vector{1.0, 0.5}),
              0.8333333333333334, 1e-12);
  EXPECT_DOUBLE_EQ(AggregateOutput(std::vector{0.3, 0.1, 0.2},
                                   std::vector{1.0, 1.0, 1.0}),
                   1.0);
  EXPECT_DOUBLE_EQ(AggregateOutput(std::vector{0.7}, std::vector{0.25}), 0.25);
  EXPECT_THROW(AggregateOutput(std::vector<double>{}, std::vector<double>{}),
               AttackError);
}

TEST(FitWhiteBox, PermutingKnownSetChangesNothing) {
  const SynthData s = testing::SmallSynth(7, 300, 2.0);
  const WhiteBoxApi api(ModelOn(s.data, {16, 8}, false, 8));
  const WhiteBoxState a = FitWhiteBox(api, s.data, 1, 5);
  std::vector<Record> shuffled = s.data.records;
  Rng rng(9);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const WhiteBoxState b =
      FitWhiteBox(api, testing::MakeDataset(s.data.schema, shuffled), 1, 5);
  ASSERT_EQ(a.selection.ranked.size(), b.selection.ranked.size());
  for (std::size_t i = 0; i < a.selection.ranked.size(); ++i) {
    EXPECT_EQ(a.selection.ranked[i].column, b.selection.ranked[i].column);
    EXPECT_NEAR(a.selection.ranked[i].rho, b.selection.ranked[i].rho, 1e-12);
  }
  const CandidateSet c = AsCandidates(s.data);
  const Vector op = WbScores(api, a, c).scores;
  EXPECT_GE(op.minCoeff(), 0.0);
  EXPECT_LE(op.maxCoeff(), 1.0);
  EXPECT_LT((op - WbScores(api, b, c).scores).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WbScores, ProductAndTreeCombinations) {
  const SynthData s = testing::SmallSynth(10, 300, 2.0);
  const WhiteBoxApi api(ModelOn(s.data, {16}, false, 11));
  const WhiteBoxState st = FitWhiteBox(api, s.data, 1);
  const Imputer imp = TrainImputer(s.data, {});
  const CandidateSet c = AsCandidates(s.data);
  const Vector op = WbScores(api, st, c).scores;
  const Vector p = ImputeProbs(imp, c.partial, 1);
  EXPECT_EQ(WbIpScores(api, st, imp, c).scores, p.cwiseProduct(op));
  const DecisionTree tree = FitWhiteBoxTree(api, st, p, s.data, {});
  const Vector t = WbTreeScores(api, st, imp, tree, c).scores;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    ASSERT_EQ(t[i], tree.Predict({p[i], op[i]}));
  }
  EXPECT_THROW(FitWhiteBoxTree(api, st, p.head(5), s.data, {}), AttackError);
  EXPECT_DOUBLE_EQ(0.5 * 0.6, 0.3);
}

TEST(NeuronReport, ColumnsAndGroupMeans) {
  const SynthData s = testing::SmallSynth(12, 200, 2.0);
  const WhiteBoxApi api(ModelOn(s.data, {6}, false, 13));
  const WhiteBoxState st = FitWhiteBox(api, s.data, 1, 2);
  const auto rows = NeuronReport(st);
  ASSERT_EQ(rows.size(), 6u);
  int selected = 0;
  for (const auto& r : rows) selected += r.selected;
  EXPECT_EQ(selected, static_cast<int>(st.selection.selected.size()));
  std::ostringstream out;
  WriteNeuronReport(out, rows);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "layer\tindex\trho\tselected\tmean_scaled_pos\tmean_scaled_neg");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 7);
}

// Hidden neuron 0 reads only the signal features that drive t.
TEST(SelectNeurons, PlantedNeuronRanksFirst) {
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SynthData s = testing::SmallSynth(seed, 2000, 2.0);
    auto target = ModelOn(s.data, {16, 8}, false, seed + 100);
    Layer& first = target->model.mutable_layers()[0];
    first.weight.col(0).setZero();
    first.bias[0] = 0.0;
    for (const EncodingBlock& b : target->encoding.blocks()) {
      if (b.feature == 0 || b.feature == 1) first.weight(b.offset, 0) = 1.0;
    }
    const WhiteBoxState st = FitWhiteBox(WhiteBoxApi(target), s.data, 1);
    const NeuronScore& top = st.selection.ranked.front();
    hits += top.column == 0 && top.rho > 0.3;
  }
  EXPECT_GE(hits, 4);
}

}  // namespace
}  // namespace attrinf
