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

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "attrinf/format.h"

namespace attrinf {

Matrix CollectActivations(const WhiteBoxApi& api,
                          std::span<const Record> records,
                          std::optional<int> sensitive) {
  return api.Activations(records, sensitive);
}

QuantileScaler QuantileScaler::Fit(const Matrix& reference) {
  if (reference.rows() == 0) {
    throw AttackError("quantile scaler: empty reference set");
  }
  QuantileScaler s;
  s.breakpoints_.resize(static_cast<std::size_t>(reference.cols()));
  s.constant_.resize(static_cast<std::size_t>(reference.cols()));
  for (Eigen::Index j = 0; j < reference.cols(); ++j) {
    auto& b = s.breakpoints_[static_cast<std::size_t>(j)];
    b.assign(reference.col(j).data(),
             reference.col(j).data() + reference.rows());
    std::sort(b.begin(), b.end());
    s.constant_[static_cast<std::size_t>(j)] = b.front() == b.back();
  }
  return s;
}

double QuantileScaler::Scale(double value, Eigen::Index neuron) const {
  if (constant(neuron)) return 0.5;
  const auto& b = breakpoints(neuron);
  const auto at_or_below = std::upper_bound(b.begin(), b.end(), value);
  return static_cast<double>(at_or_below - b.begin()) /
         static_cast<double>(b.size());
}

Matrix QuantileScaler::Transform(const Matrix& activations) const {
  if (activations.cols() != num_neurons()) {
    throw AttackError("quantile scaler: expected " +
                      std::to_string(num_neurons()) + " neurons, got " +
                      std::to_string(activations.cols()));
  }
  Matrix out(activations.rows(), activations.cols());
  for (Eigen::Index j = 0; j < activations.cols(); ++j) {
    for (Eigen::Index i = 0; i < activations.rows(); ++i) {
      out(i, j) = Scale(activations(i, j), j);
    }
  }
  return out;
}

PearsonResult Pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw AttackError("pearson: need two aligned samples of size >= 2");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return {0.0, true};
  return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), false};
}

NeuronSelection SelectNeurons(const Matrix& scaled, std::span<const int> labels,
                              std::span<const int> layer_sizes, int k) {
  if (k < 1) throw AttackError("neuron selection: k must be >= 1");
  if (static_cast<std::size_t>(scaled.rows()) != labels.size()) {
    throw AttackError("neuron selection: labels do not match activations");
  }
  int total = 0;
  for (int s : layer_sizes) total += s;
  if (total != scaled.cols()) {
    throw AttackError("neuron selection: layer sizes do not match activations");
  }
  const std::vector<double> y(labels.begin(), labels.end());
  NeuronSelection sel;
  sel.k = k;
  sel.ranked.reserve(static_cast<std::size_t>(total));
  std::vector<double> column(static_cast<std::size_t>(scaled.rows()));
  int col = 0;
  for (int layer = 0; layer < static_cast<int>(layer_sizes.size()); ++layer) {
    for (int idx = 0; idx < layer_sizes[static_cast<std::size_t>(layer)];
         ++idx, ++col) {
      for (Eigen::Index i = 0; i < scaled.rows(); ++i) {
        column[static_cast<std::size_t>(i)] = scaled(i, col);
      }
      const PearsonResult p = Pearson(column, y);
      sel.ranked.push_back({layer, idx, col, p.rho, p.constant});
    }
  }
  std::stable_sort(sel.ranked.begin(), sel.ranked.end(),
                   [](const NeuronScore& a, const NeuronScore& b) {
                     return a.rho > b.rho;
                   });
  for (const NeuronScore& n : sel.ranked) {
    if (static_cast<int>(sel.selected.size()) == k || n.rho <= 0.0) break;
    sel.selected.push_back(n);
  }
  if (sel.selected.empty()) {
    throw AttackError(
        "neuron selection: no neuron correlates positively with the target "
        "value on the known set");
  }
  return sel;
}

WhiteBoxState FitWhiteBox(const WhiteBoxApi& api, const Dataset& aux,
                          int target, int k) {
  if (aux.size() < 2) {
    throw AttackError("white-box attack: known set needs at least 2 records");
  }
  FlipResult flipped = FlipSensitive(aux.records, target);
  WhiteBoxState state;
  state.target = target;
  const Matrix raw = CollectActivations(api, flipped.records);
  state.scaler = QuantileScaler::Fit(raw);
  state.scaled_u = state.scaler.Transform(raw);
  state.was_target = std::move(flipped.was_target);
  state.selection =
      SelectNeurons(state.scaled_u, state.was_target, api.layer_sizes(), k);
  return state;
}

double AggregateOutput(std::span<const double> weights,
                       std::span<const double> scaled) {
  if (weights.empty() || weights.size() != scaled.size()) {
    throw AttackError("aggregate output: empty or misaligned selection");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    num += weights[j] * scaled[j];
    den += weights[j];
  }
  return num / den;
}

Vector WbSignals(const WhiteBoxApi& api, const WhiteBoxState& state,
                 std::span<const Record> partial) {
  const auto& sel = state.selection.selected;
  if (sel.empty()) throw AttackError("white-box attack: empty selection");
  const Matrix raw = CollectActivations(api, partial, state.target);
  std::vector<double> weights;
  for (const NeuronScore& n : sel) weights.push_back(n.rho);
  std::vector<double> scaled(sel.size());
  Vector op(raw.rows());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    for (std::size_t j = 0; j < sel.size(); ++j) {
      scaled[j] = state.scaler.Scale(raw(i, sel[j].column), sel[j].column);
    }
    op[i] = AggregateOutput(weights, scaled);
  }
  return op;
}

namespace {

AttackScoring MakeScoring(std::string name, const CandidateSet& c, int target,
                          Vector scores) {
  AttackScoring s;
  s.attack = std::move(name);
  s.target = target;
  s.ids = c.ids();
  s.scores = std::move(scores);
  s.Validate();
  return s;
}

}  // namespace

AttackScoring WbScores(const WhiteBoxApi& api, const WhiteBoxState& state,
                       const CandidateSet& candidates) {
  return MakeScoring("WB", candidates, state.target,
                     WbSignals(api, state, candidates.partial));
}

AttackScoring WbIpScores(const WhiteBoxApi& api, const WhiteBoxState& state,
                         const Imputer& imputer,
                         const CandidateSet& candidates) {
  const Vector op = WbSignals(api, state, candidates.partial);
  const Vector p = ImputeProbs(imputer, candidates.partial, state.target);
  return MakeScoring("WB·IP", candidates, state.target, p.cwiseProduct(op));
}

AttackScoring WbTreeScores(const WhiteBoxApi& api, const WhiteBoxState& state,
                           const Imputer& imputer, const DecisionTree& tree,
                           const CandidateSet& candidates) {
  const Vector op = WbSignals(api, state, candidates.partial);
  const Vector p = ImputeProbs(imputer, candidates.partial, state.target);
  Vector s(op.size());
  for (Eigen::Index i = 0; i < op.size(); ++i) {
    s[i] = TreeConfidence(tree, p[i], op[i]);
  }
  return MakeScoring("WB◊IP", candidates, state.target, std::move(s));
}

DecisionTree FitWhiteBoxTree(const WhiteBoxApi& api, const WhiteBoxState& state,
                             const Vector& aux_imputation, const Dataset& aux,
                             const TreeParams& params) {
  if (static_cast<std::size_t>(aux_imputation.size()) != aux.size()) {
    throw AttackError("white-box tree: imputation does not match aux");
  }
  const Vector op = WbSignals(api, state, aux.records);
  const Vector& p = aux_imputation;
  std::vector<TreePoint> points;
  points.reserve(aux.size());
  for (std::size_t i = 0; i < aux.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    points.push_back(
        {{p[k], op[k]}, aux.records[i].sensitive == state.target ? 1 : 0});
  }
  return FitTree(points, params);
}

std::vector<NeuronReportRow> NeuronReport(const WhiteBoxState& state) {
  std::vector<NeuronReportRow> rows;
  rows.reserve(state.selection.ranked.size());
  const auto& sel = state.selection.selected;
  for (const NeuronScore& n : state.selection.ranked) {
    NeuronReportRow row;
    row.neuron = n;
    row.selected = std::any_of(sel.begin(), sel.end(), [&](const NeuronScore& s) {
      return s.column == n.column;
    });
    double pos = 0.0, neg = 0.0;
    std::size_t npos = 0, nneg = 0;
    for (std::size_t i = 0; i < state.was_target.size(); ++i) {
      const double v = state.scaled_u(static_cast<Eigen::Index>(i), n.column);
      if (state.was_target[i]) {
        pos += v;
        ++npos;
      } else {
        neg += v;
        ++nneg;
      }
    }
    if (npos) row.mean_scaled_positive = pos / static_cast<double>(npos);
    if (nneg) row.mean_scaled_negative = neg / static_cast<double>(nneg);
    rows.push_back(row);
  }
  return rows;
}

void WriteNeuronReport(std::ostream& out,
                       std::span<const NeuronReportRow> rows) {
  out << "layer\tindex\trho\tselected\tmean_scaled_pos\tmean_scaled_neg\n";
  for (const NeuronReportRow& r : rows) {
    out << r.neuron.layer << '\t' << r.neuron.index << '\t'
        << FormatDouble(r.neuron.rho) << '\t' << (r.selected ? 1 : 0) << '\t'
        << FormatOptional(r.mean_scaled_positive) << '\t'
        << FormatOptional(r.mean_scaled_negative) << '\n';
  }
}

}  // namespace attrinf
