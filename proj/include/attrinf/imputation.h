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

// The model-free adversary: a small neural network estimating
// Pr[t | non-sensitive features, label] from the auxiliary set alone.

#ifndef ATTRINF_IMPUTATION_H_
#define ATTRINF_IMPUTATION_H_

#include <optional>
#include <span>

#include "attrinf/mlp.h"
#include "attrinf/tabular.h"

namespace attrinf {

struct ImputerConfig {
  std::vector<int> hidden_dims = {64};
  bool use_label_feature = true;
  TrainConfig train{.epochs = 30,
                    .batch_size = 32,
                    .learning_rate = 0.05,
                    .seed = 0,
                    .min_steps = 600};
};

class Imputer {
 public:
  // Output distribution over the sensitive values, one row per record.
  Matrix Distributions(std::span<const Record> records) const;
  Vector Distribution(const Record& r) const;

  // Set when every auxiliary record shared one sensitive value; the imputer
  // then predicts that value with probability 1.
  bool degenerate() const { return degenerate_value_.has_value(); }
  int num_values() const { return num_values_; }
  std::size_t training_size() const { return training_size_; }
  const Encoding& encoding() const { return encoding_; }

 private:
  friend Imputer TrainImputer(const Dataset& aux, const ImputerConfig& cfg);

  Encoding encoding_;
  std::optional<Mlp> model_;
  std::optional<int> degenerate_value_;
  int num_values_ = 0;
  std::size_t training_size_ = 0;
};

// Trains on `aux` only. Throws DataError when |aux| < 2.
Imputer TrainImputer(const Dataset& aux, const ImputerConfig& cfg);

double ImputeProb(const Imputer& imputer, const Record& partial, int target);
// Pr[target | .] for every record.
Vector ImputeProbs(const Imputer& imputer, std::span<const Record> records,
                   int target);

// Index of the largest entry; ties go to the earliest declared value.
int ArgmaxFirst(const Eigen::Ref<const Vector>& v);

int ImputeArgmax(const Imputer& imputer, const Record& partial);

// Modal sensitive value of `aux`; ties go to the earliest declared value.
int MostCommonBaseline(const Dataset& aux);

// Pr[target | .] for every record of `aux`, each predicted by an imputer
// trained without the record's fold (record i sits in fold i % folds). The
// number of folds is capped at |aux| / 2; below 2 folds the imputer trained
// on all of `aux` scores its own training records.
Vector CrossFittedProbs(const Dataset& aux, const ImputerConfig& cfg,
                        int target, int folds);

// Mean log-likelihood of the true sensitive values of `data`.
double HeldOutLogLikelihood(const Imputer& imputer, const Dataset& data);

}  // namespace attrinf

#endif  // ATTRINF_IMPUTATION_H_
