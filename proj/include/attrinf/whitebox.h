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

// Neuron-activation attack.
//
// The adversary flips every record of its known set U to t*, collects the
// hidden activations, scales each neuron by its empirical CDF on U and ranks
// neurons by the Pearson correlation between the scaled activation and the
// original indicator t == t*. A candidate's signal is the correlation-
// weighted mean of the scaled activations of the top-k positively correlated
// neurons, which lies in [0, 1].

#ifndef ATTRINF_WHITEBOX_H_
#define ATTRINF_WHITEBOX_H_

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "attrinf/attack_core.h"
#include "attrinf/imputation.h"
#include "attrinf/target_model.h"

namespace attrinf {

// Activations of every hidden neuron, columns ordered layer by layer.
Matrix CollectActivations(const WhiteBoxApi& api,
                          std::span<const Record> records,
                          std::optional<int> sensitive = std::nullopt);

class QuantileScaler {
 public:
  // Each column of `reference` becomes the breakpoints of one neuron.
  static QuantileScaler Fit(const Matrix& reference);

  // Fraction of reference values <= value; 0.5 for constant neurons.
  double Scale(double value, Eigen::Index neuron) const;
  Matrix Transform(const Matrix& activations) const;

  Eigen::Index num_neurons() const {
    return static_cast<Eigen::Index>(breakpoints_.size());
  }
  bool constant(Eigen::Index neuron) const {
    return constant_[static_cast<std::size_t>(neuron)];
  }
  const std::vector<double>& breakpoints(Eigen::Index neuron) const {
    return breakpoints_[static_cast<std::size_t>(neuron)];
  }

 private:
  std::vector<std::vector<double>> breakpoints_;  // sorted ascending
  std::vector<bool> constant_;
};

struct PearsonResult {
  double rho = 0.0;
  bool constant = false;  // zero variance on either side; rho is then 0
};

PearsonResult Pearson(std::span<const double> xs, std::span<const double> ys);

struct NeuronScore {
  int layer = 0;
  int index = 0;   // within the layer
  int column = 0;  // in the concatenated activation matrix
  double rho = 0.0;
  bool constant = false;
};

struct NeuronSelection {
  std::vector<NeuronScore> ranked;    // every neuron, rho descending
  std::vector<NeuronScore> selected;  // top-k with rho > 0
  int k = 10;
  // Fewer than k neurons correlate positively.
  bool short_selection() const {
    return static_cast<int>(selected.size()) < k;
  }
};

// Ranks the columns of `scaled` by correlation with `labels` (0/1). Ties go
// to the earlier column. Throws AttackError when no neuron has rho > 0.
NeuronSelection SelectNeurons(const Matrix& scaled, std::span<const int> labels,
                              std::span<const int> layer_sizes, int k);

struct WhiteBoxState {
  int target = 0;
  QuantileScaler scaler;
  NeuronSelection selection;
  Matrix scaled_u;             // scaled activations of flipped U
  std::vector<int> was_target;
};

WhiteBoxState FitWhiteBox(const WhiteBoxApi& api, const Dataset& aux,
                          int target, int k = 10);

// sum(w_j * s_j) / sum(w_j).
double AggregateOutput(std::span<const double> weights,
                       std::span<const double> scaled);

// op for every record, queried with t*.
Vector WbSignals(const WhiteBoxApi& api, const WhiteBoxState& state,
                 std::span<const Record> partial);

AttackScoring WbScores(const WhiteBoxApi& api, const WhiteBoxState& state,
                       const CandidateSet& candidates);
AttackScoring WbIpScores(const WhiteBoxApi& api, const WhiteBoxState& state,
                         const Imputer& imputer,
                         const CandidateSet& candidates);
AttackScoring WbTreeScores(const WhiteBoxApi& api, const WhiteBoxState& state,
                           const Imputer& imputer, const DecisionTree& tree,
                           const CandidateSet& candidates);

// Tree on U = aux: features (Pr[t* | .], op), label t == t*, with
// `aux_imputation` as for FitConfidenceTree.
DecisionTree FitWhiteBoxTree(const WhiteBoxApi& api, const WhiteBoxState& state,
                             const Vector& aux_imputation, const Dataset& aux,
                             const TreeParams& params);

struct NeuronReportRow {
  NeuronScore neuron;
  bool selected = false;
  std::optional<double> mean_scaled_positive;  // absent for an empty group
  std::optional<double> mean_scaled_negative;
};

std::vector<NeuronReportRow> NeuronReport(const WhiteBoxState& state);

// Columns: layer, index, rho, selected, mean_scaled_pos, mean_scaled_neg.
void WriteNeuronReport(std::ostream& out,
                       std::span<const NeuronReportRow> rows);

}  // namespace attrinf

#endif  // ATTRINF_WHITEBOX_H_
