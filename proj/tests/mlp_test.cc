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

#include "attrinf/mlp.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.h"
#include "test_util.h"

namespace attrinf {
namespace {

using testing::RandomMatrix;
using testing::RandomMlp;

TEST(Forward, ZeroModelIsUniform) {
  const Mlp m = Mlp::Zeros({.input_dim = 3, .hidden_dims = {4}, .num_classes = 2});
  const ActivationTrace t = m.Forward(Vector::Ones(3));
  EXPECT_DOUBLE_EQ(t.confidence[0], 0.5);
  EXPECT_DOUBLE_EQ(t.confidence[1], 0.5);
  EXPECT_EQ(t.hidden[0], Vector::Zero(4));
}

TEST(Forward, ReluClampsNegativeUnit) {
  Mlp m = Mlp::Zeros({.input_dim = 1, .hidden_dims = {1}, .num_classes = 2});
  m.mutable_layers()[0].weight(0, 0) = -1.0;
  const ActivationTrace t = m.Forward(Vector::Ones(1));
  EXPECT_EQ(t.hidden[0][0], 0.0);
}

TEST(Forward, MatchesLoopOracle) {
  const MlpSpec spec{.input_dim = 7, .hidden_dims = {9, 6, 5}, .num_classes = 4};
  const Mlp m = RandomMlp(spec, 3);
  const Matrix x = RandomMatrix(20, 7, 4);
  const BatchTrace batch = m.ForwardBatch(x);
  const Matrix hidden = m.HiddenActivations(x);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vector row = x.row(i).transpose();
    const auto oracle =
        oracle::Forward(m, std::vector<double>(row.data(), row.data() + row.size()));
    const ActivationTrace t = m.Forward(row);
    int col = 0;
    for (std::size_t l = 0; l < spec.hidden_dims.size(); ++l) {
      for (int j = 0; j < spec.hidden_dims[l]; ++j, ++col) {
        EXPECT_NEAR(t.hidden[l][j], oracle[l + 1][static_cast<std::size_t>(j)],
                    1e-10);
        EXPECT_NEAR(hidden(i, col), t.hidden[l][j], 1e-12);
      }
    }
    for (int c = 0; c < spec.num_classes; ++c) {
      EXPECT_NEAR(t.confidence[c], oracle.back()[static_cast<std::size_t>(c)],
                  1e-10);
      EXPECT_NEAR(batch.probs(i, c), t.confidence[c], 1e-12);
    }
  }
}

TEST(Forward, TraceInvariantsHold) {
  const MlpSpec spec{.input_dim = 5, .hidden_dims = {16, 16}, .num_classes = 6};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Mlp m = RandomMlp(spec, seed);
    const Matrix x = RandomMatrix(50, 5, seed + 100, 3.0);
    const BatchTrace t = m.ForwardBatch(x);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      EXPECT_NEAR(t.probs.row(i).sum(), 1.0, 1e-6);
      EXPECT_GE(t.probs.row(i).minCoeff(), 0.0);
      EXPECT_LE(t.probs.row(i).maxCoeff(), 1.0);
    }
    for (std::size_t l = 1; l < t.post.size(); ++l) {
      EXPECT_GE(t.post[l].minCoeff(), 0.0);
    }
  }
}

TEST(Forward, RejectsDimensionMismatch) {
  const Mlp m = Mlp::Initialize({.input_dim = 3, .hidden_dims = {2}, .num_classes = 2}, 1);
  EXPECT_THROW(m.Forward(Vector::Ones(4)), DataError);
  EXPECT_THROW(m.ForwardBatch(Matrix::Ones(2, 2)), DataError);
}

TEST(Softmax, StableForLargeLogits) {
  Matrix logits(1, 3);
  logits << 1000.0, 1000.0, -1000.0;
  const Matrix p = Softmax(logits);
  EXPECT_DOUBLE_EQ(p(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(p(0, 2), 0.0);
}

TEST(MlpSpec, RejectsBadShapes) {
  EXPECT_THROW((MlpSpec{.input_dim = 0, .hidden_dims = {2}, .num_classes = 2}.Validate()),
               ConfigError);
  EXPECT_THROW((MlpSpec{.input_dim = 2, .hidden_dims = {}, .num_classes = 2}.Validate()),
               ConfigError);
  EXPECT_THROW((MlpSpec{.input_dim = 2, .hidden_dims = {0}, .num_classes = 2}.Validate()),
               ConfigError);
}

TEST(Initialize, UniformFanInScale) {
  const Mlp m = Mlp::Initialize({.input_dim = 16, .hidden_dims = {32}, .num_classes = 3}, 5);
  const double bound = 1.0 / std::sqrt(16.0);
  EXPECT_LE(m.layers()[0].weight.cwiseAbs().maxCoeff(), bound);
  EXPECT_GT(m.layers()[0].weight.cwiseAbs().maxCoeff(), 0.8 * bound);
  EXPECT_EQ(m.layers()[0].bias, Vector::Zero(32));
  EXPECT_EQ(m, Mlp::Initialize(m.spec(), 5));
}

TEST(Gradient, MatchesCentralDifferencesOnRandomNetworks) {
  std::mt19937 pick(2026);
  for (int trial = 0; trial < 50; ++trial) {
    MlpSpec spec;
    spec.input_dim = 2 + static_cast<int>(pick() % 5);
    spec.hidden_dims.clear();
    const int depth = 1 + static_cast<int>(pick() % 3);
    for (int d = 0; d < depth; ++d) {
      spec.hidden_dims.push_back(2 + static_cast<int>(pick() % 6));
    }
    spec.num_classes = 2 + static_cast<int>(pick() % 3);
    const Mlp m = RandomMlp(spec, 1000 + trial);
    const Matrix x = RandomMatrix(4, spec.input_dim, 2000 + trial);
    std::vector<int> y;
    for (int i = 0; i < 4; ++i) {
      y.push_back(static_cast<int>(pick() % static_cast<unsigned>(spec.num_classes)));
    }
    double loss = 0.0;
    const Gradients g = Gradient(m, x, y, &loss);
    EXPECT_NEAR(loss, oracle::Loss(m, x, y), 1e-10);
    const Gradients fd = oracle::FiniteDifferences(m, x, y, 1e-5);
    EXPECT_LT(oracle::RelativeError(g, fd), 1e-4) << "network " << trial;
  }
}

TEST(Gradient, DuplicatedBatchHasSameMean) {
  const Mlp m = RandomMlp({.input_dim = 3, .hidden_dims = {5}, .num_classes = 3}, 8);
  const Matrix x = RandomMatrix(3, 3, 9);
  const std::vector<int> y = {0, 2, 1};
  Matrix xx(6, 3);
  xx << x, x;
  const std::vector<int> yy = {0, 2, 1, 0, 2, 1};
  const Gradients a = Gradient(m, x, y);
  const Gradients b = Gradient(m, xx, yy);
  EXPECT_LT(oracle::RelativeError(a, b), 1e-14);
}

TEST(Gradient, PerExampleDeltasSumToBatchGradient) {
  const Mlp m = RandomMlp({.input_dim = 4, .hidden_dims = {6, 5}, .num_classes = 3}, 10);
  const Matrix x = RandomMatrix(5, 4, 11);
  const std::vector<int> y = {0, 1, 2, 1, 0};
  const BatchTrace trace = m.ForwardBatch(x);
  const std::vector<Matrix> deltas = BatchDeltas(m, trace, y);
  Gradients sum = Gradients::ZerosLike(m);
  Gradients one = Gradients::ZerosLike(m);
  for (int i = 0; i < 5; ++i) {
    ExampleGradient(m, trace, i, y[static_cast<std::size_t>(i)], one);
    for (std::size_t l = 0; l < deltas.size(); ++l) {
      const Matrix outer =
          trace.post[l].row(i).transpose() * deltas[l].row(i);
      EXPECT_LT((outer - one.layers[l].weight).cwiseAbs().maxCoeff(), 1e-12);
    }
    sum.AddScaled(one, 1.0 / 5);
  }
  EXPECT_LT(oracle::RelativeError(sum, Gradient(m, x, y)), 1e-12);
  EXPECT_THROW(BatchDeltas(m, trace, std::vector<int>{0, 1, 2, 1, 3}),
               DataError);
}

// Two well-separated blobs along the first coordinate.
void Separable(std::size_t n, std::uint64_t seed, Matrix& x,
               std::vector<int>& y) {
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  x.resize(static_cast<Eigen::Index>(n), 2);
  y.clear();
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 2);
    x(static_cast<Eigen::Index>(i), 0) = (c ? 2.0 : -2.0) + noise(rng);
    x(static_cast<Eigen::Index>(i), 1) = noise(rng);
    y.push_back(c);
  }
}

TEST(Train, SeparableProblemIsLearned) {
  Matrix x;
  std::vector<int> y;
  Separable(400, 1, x, y);
  const MlpSpec spec{.input_dim = 2, .hidden_dims = {16}, .num_classes = 2};
  const Mlp m = Train(Mlp::Initialize(spec, 2), x, y,
                      {.epochs = 30, .batch_size = 20, .learning_rate = 0.1, .seed = 3});
  EXPECT_GE(Accuracy(m, x, y), 0.95);
}

TEST(Train, GradientVanishesAtConvergence) {
  Matrix x;
  std::vector<int> y;
  Separable(100, 4, x, y);
  const MlpSpec spec{.input_dim = 2, .hidden_dims = {8}, .num_classes = 2};
  const Mlp m = Train(Mlp::Initialize(spec, 5), x, y,
                      {.epochs = 3000, .batch_size = 100, .learning_rate = 0.5, .seed = 6});
  EXPECT_LT(std::sqrt(Gradient(m, x, y).SquaredNorm()), 1e-3);
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  Matrix x;
  std::vector<int> y;
  Separable(50, 7, x, y);
  const Mlp init = Mlp::Initialize({.input_dim = 2, .hidden_dims = {4}, .num_classes = 2}, 8);
  EXPECT_EQ(Train(init, x, y, {.epochs = 0}), init);
}

TEST(Train, SameSeedIsBitIdentical) {
  Matrix x;
  std::vector<int> y;
  Separable(120, 9, x, y);
  const Mlp init = Mlp::Initialize({.input_dim = 2, .hidden_dims = {6, 6}, .num_classes = 2}, 10);
  const TrainConfig cfg{.epochs = 5, .batch_size = 16, .learning_rate = 0.1, .seed = 11};
  const Mlp a = Train(init, x, y, cfg);
  EXPECT_EQ(a, Train(init, x, y, cfg));
  TrainConfig other = cfg;
  other.seed = 12;
  EXPECT_FALSE(a == Train(init, x, y, other));
}

TEST(Train, DivergenceAborts) {
  Matrix x;
  std::vector<int> y;
  Separable(40, 13, x, y);
  x *= 1e150;
  const Mlp init = Mlp::Initialize({.input_dim = 2, .hidden_dims = {4}, .num_classes = 2}, 14);
  EXPECT_THROW(Train(init, x, y, {.epochs = 5, .batch_size = 8, .learning_rate = 1e150}),
               TrainingError);
}

TEST(TrainConfig, MinStepsRaisesEpochs) {
  const TrainConfig cfg{.epochs = 2, .batch_size = 10, .min_steps = 25};
  EXPECT_EQ(cfg.ResolvedEpochs(100), 3);  // 10 steps per epoch
  EXPECT_EQ(cfg.ResolvedEpochs(1000), 2);
}

TEST(Serialization, RoundTripIsBitExact) {
  Mlp m = RandomMlp({.input_dim = 5, .hidden_dims = {7, 3}, .num_classes = 4}, 15);
  m.mutable_layers()[0].weight(0, 0) = 0.1 + 0.2;  // not a short decimal
  m.mutable_layers()[1].bias[2] = -std::numeric_limits<double>::denorm_min();
  m.mutable_info().epochs = 12;
  m.mutable_info().dp = true;
  m.mutable_info().epsilon = 1.0 / 3.0;
  std::stringstream ss;
  WriteMlp(ss, m);
  const Mlp back = ReadMlp(ss);
  EXPECT_EQ(back, m);
  EXPECT_EQ(back.spec(), m.spec());
  EXPECT_EQ(back.info().epochs, 12);
  EXPECT_TRUE(back.info().dp);
  EXPECT_EQ(back.info().epsilon, 1.0 / 3.0);
  std::stringstream again;
  WriteMlp(again, back);
  std::stringstream first;
  WriteMlp(first, m);
  EXPECT_EQ(again.str(), first.str());

  testing::TempDir dir;
  SaveMlp((dir.path() / "m.txt").string(), m);
  EXPECT_EQ(LoadMlp((dir.path() / "m.txt").string()), m);
}

TEST(Serialization, RejectsCorruptInput) {
  std::stringstream bad("not-a-model 1\n");
  EXPECT_THROW(ReadMlp(bad), DataError);
  std::stringstream ss;
  WriteMlp(ss, RandomMlp({.input_dim = 2, .hidden_dims = {2}, .num_classes = 2}, 1));
  const std::string text = ss.str();
  std::stringstream truncated(text.substr(0, text.size() / 2));
  EXPECT_THROW(ReadMlp(truncated), DataError);
}

}  // namespace
}  // namespace attrinf
