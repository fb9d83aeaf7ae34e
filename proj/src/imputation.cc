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

#include "attrinf/imputation.h"

#include <algorithm>
#include <cmath>

namespace attrinf {

Imputer TrainImputer(const Dataset& aux, const ImputerConfig& cfg) {
  if (aux.size() < 2) {
    throw DataError("imputer: need at least 2 auxiliary records, got " +
                    std::to_string(aux.size()));
  }
  Imputer imp;
  imp.num_values_ = aux.schema->num_sensitive_values();
  imp.training_size_ = aux.size();
  imp.encoding_ = Encoding::Fit(
      aux, {.include_sensitive = false,
            .include_label = cfg.use_label_feature});

  const int first = aux.records.front().sensitive;
  const bool single = std::all_of(
      aux.records.begin(), aux.records.end(),
      [first](const Record& r) { return r.sensitive == first; });
  if (single) {
    imp.degenerate_value_ = first;
    return imp;
  }

  const Matrix x = imp.encoding_.Encode(aux.records);
  std::vector<int> y;
  y.reserve(aux.size());
  for (const Record& r : aux.records) y.push_back(r.sensitive);
  MlpSpec spec{.input_dim = static_cast<int>(x.cols()),
               .hidden_dims = cfg.hidden_dims,
               .num_classes = imp.num_values_};
  if (spec.input_dim == 0) {
    // No usable features: fall back to a constant input so the network
    // learns the marginal.
    spec.input_dim = 1;
    imp.model_ = Train(Mlp::Initialize(spec, cfg.train.seed),
                       Matrix::Ones(x.rows(), 1), y, cfg.train);
    return imp;
  }
  imp.model_ = Train(Mlp::Initialize(spec, cfg.train.seed), x, y, cfg.train);
  return imp;
}

Matrix Imputer::Distributions(std::span<const Record> records) const {
  const auto n = static_cast<Eigen::Index>(records.size());
  if (degenerate_value_) {
    Matrix out = Matrix::Zero(n, num_values_);
    out.col(*degenerate_value_).setOnes();
    return out;
  }
  if (encoding_.width() == 0) {
    return model_->PredictProba(Matrix::Ones(n, 1));
  }
  return model_->PredictProba(encoding_.Encode(records));
}

Vector Imputer::Distribution(const Record& r) const {
  return Distributions(std::span<const Record>(&r, 1)).row(0).transpose();
}

double ImputeProb(const Imputer& imputer, const Record& partial, int target) {
  if (target < 0 || target >= imputer.num_values()) {
    throw DataError("impute: target value index out of range");
  }
  return imputer.Distribution(partial)[target];
}

Vector ImputeProbs(const Imputer& imputer, std::span<const Record> records,
                   int target) {
  if (target < 0 || target >= imputer.num_values()) {
    throw DataError("impute: target value index out of range");
  }
  return imputer.Distributions(records).col(target);
}

int ArgmaxFirst(const Eigen::Ref<const Vector>& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = static_cast<int>(i);
  }
  return best;
}

int ImputeArgmax(const Imputer& imputer, const Record& partial) {
  return ArgmaxFirst(imputer.Distribution(partial));
}

int MostCommonBaseline(const Dataset& aux) {
  if (aux.empty()) throw DataError("most-common baseline: empty auxiliary set");
  Vector counts = Vector::Zero(aux.schema->num_sensitive_values());
  for (const Record& r : aux.records) counts[r.sensitive] += 1.0;
  return ArgmaxFirst(counts);
}

Vector CrossFittedProbs(const Dataset& aux, const ImputerConfig& cfg,
                        int target, int folds) {
  const int k = std::min<int>(folds, static_cast<int>(aux.size() / 2));
  if (k < 2) return ImputeProbs(TrainImputer(aux, cfg), aux.records, target);
  Vector out(static_cast<Eigen::Index>(aux.size()));
  for (int fold = 0; fold < k; ++fold) {
    std::vector<std::size_t> fit, held;
    for (std::size_t i = 0; i < aux.size(); ++i) {
      (static_cast<int>(i % static_cast<std::size_t>(k)) == fold ? held : fit)
          .push_back(i);
    }
    ImputerConfig fold_cfg = cfg;
    fold_cfg.train.seed =
        DeriveSeed(cfg.train.seed, static_cast<std::uint64_t>(fold) + 1, "fold");
    const Imputer imputer = TrainImputer(aux.Subset(fit), fold_cfg);
    const Dataset held_out = aux.Subset(held);
    const Vector p = ImputeProbs(imputer, held_out.records, target);
    for (std::size_t j = 0; j < held.size(); ++j) {
      out[static_cast<Eigen::Index>(held[j])] = p[static_cast<Eigen::Index>(j)];
    }
  }
  return out;
}

double HeldOutLogLikelihood(const Imputer& imputer, const Dataset& data) {
  const Matrix p = imputer.Distributions(data.records);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    total += std::log(std::max(
        p(static_cast<Eigen::Index>(i), data.records[i].sensitive), 1e-12));
  }
  return total / static_cast<double>(data.size());
}

}  // namespace attrinf
