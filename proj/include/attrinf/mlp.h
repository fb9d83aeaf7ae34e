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

// Fully connected ReLU network with a softmax head, trained by minibatch SGD
// on mean cross-entropy. Inputs are row-major batches: one example per row.

#ifndef ATTRINF_MLP_H_
#define ATTRINF_MLP_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "attrinf/common.h"

namespace attrinf {

struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden_dims = {256, 256};
  int num_classes = 0;

  void Validate() const;
  int total_hidden() const;
  bool operator==(const MlpSpec&) const = default;
};

// weight is (fan_in x fan_out) so a layer computes a * weight + bias^T.
struct Layer {
  Matrix weight;
  Vector bias;
};

struct TrainingInfo {
  int epochs = 0;
  std::uint64_t seed = 0;
  bool dp = false;
  double noise_multiplier = 0.0;
  double clip_norm = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  double final_loss = 0.0;
};

// Post-ReLU activations of every hidden layer plus the softmax output.
struct ActivationTrace {
  std::vector<Vector> hidden;
  Vector confidence;  // V
};

// Same quantities for a batch; row i belongs to input row i.
struct BatchTrace {
  std::vector<Matrix> pre;     // pre-activations, hidden and output layers
  std::vector<Matrix> post;    // post[0] = input, post[l+1] = ReLU(pre[l])
  Matrix probs;
};

class Mlp {
 public:
  Mlp() = default;
  Mlp(MlpSpec spec, std::vector<Layer> layers);

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  static Mlp Initialize(const MlpSpec& spec, std::uint64_t seed);
  static Mlp Zeros(const MlpSpec& spec);

  const MlpSpec& spec() const { return spec_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }
  const TrainingInfo& info() const { return info_; }
  TrainingInfo& mutable_info() { return info_; }

  ActivationTrace Forward(const Eigen::Ref<const Vector>& x) const;
  BatchTrace ForwardBatch(const Matrix& x) const;
  Matrix PredictProba(const Matrix& x) const;
  // Concatenated post-ReLU activations of all hidden layers, layer order.
  Matrix HiddenActivations(const Matrix& x) const;

  bool AllFinite() const;
  std::size_t num_parameters() const;
  bool operator==(const Mlp& other) const;  // bit-exact parameter equality

 private:
  MlpSpec spec_;
  std::vector<Layer> layers_;
  TrainingInfo info_;
};

// Row-wise softmax, stabilized by the row max.
Matrix Softmax(const Matrix& logits);

// Per-parameter gradients, shaped like Mlp::layers().
struct Gradients {
  std::vector<Layer> layers;

  static Gradients ZerosLike(const Mlp& model);
  double SquaredNorm() const;
  void SetZero();
  void Scale(double s);
  void AddScaled(const Gradients& other, double s);
};

// Gradient of mean cross-entropy over the batch; `loss` receives the loss.
Gradients Gradient(const Mlp& model, const Matrix& x,
                   std::span<const int> labels, double* loss = nullptr);

// Per-example output-side errors dL_i/d(pre-activation) of every layer,
// one row per example (not divided by the batch size). The weight gradient
// of example i at layer l is post[l].row(i)^T * deltas[l].row(i).
std::vector<Matrix> BatchDeltas(const Mlp& model, const BatchTrace& trace,
                                std::span<const int> labels);

// Gradient of the cross-entropy of row `row` alone, written into `out`
// (which must already be shaped like the model). Uses the cached batch
// trace of the rows it belongs to.
void ExampleGradient(const Mlp& model, const BatchTrace& trace, int row,
                     int label, Gradients& out);

double MeanCrossEntropy(const Mlp& model, const Matrix& x,
                        std::span<const int> labels);
double Accuracy(const Mlp& model, const Matrix& x, std::span<const int> labels);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 200;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  // Raise the epoch count so at least this many SGD steps run (0 = off).
  int min_steps = 0;

  int ResolvedEpochs(std::size_t n) const;
};

// Plain minibatch SGD. Batches come from a per-epoch shuffle drawn from
// `seed`; throws TrainingError on a non-finite loss or parameter.
Mlp Train(Mlp init, const Matrix& x, std::span<const int> labels,
          const TrainConfig& cfg);

// Shuffled batch order for one epoch; shared by Train and TrainDp so both
// see identical batch sequences under the same seed.
std::vector<std::size_t> EpochOrder(std::size_t n, Rng& rng);

// --- Serialization ----------------------------------------------------------

void WriteMlp(std::ostream& out, const Mlp& model);
Mlp ReadMlp(std::istream& in);
void SaveMlp(const std::string& path, const Mlp& model);
Mlp LoadMlp(const std::string& path);

}  // namespace attrinf

#endif  // ATTRINF_MLP_H_
