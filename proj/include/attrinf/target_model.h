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

// The released classifier and the capability handles through which attacks
// reach it. An attack can only call what its handle exposes: BlackBoxApi
// returns confidence vectors, WhiteBoxApi adds hidden activations. Handles
// are minted by ModelRelease according to the access level of the threat
// model, and minting one the release does not grant throws AccessViolation.

#ifndef ATTRINF_TARGET_MODEL_H_
#define ATTRINF_TARGET_MODEL_H_

#include <memory>
#include <optional>
#include <span>

#include "attrinf/dp.h"
#include "attrinf/mlp.h"
#include "attrinf/tabular.h"

namespace attrinf {

// A trained classifier together with the input encoding fitted by its
// trainer.
struct TargetModel {
  Mlp model;
  Encoding encoding;
};

struct TargetTrainingOptions {
  std::vector<int> hidden_dims = {256, 256};
  TrainConfig train;
  std::optional<DpConfig> dp;
};

// Fits the encoding on `train`, then trains with SGD (or DP-SGD when
// options.dp is set).
TargetModel TrainTargetModel(const Dataset& train,
                             const TargetTrainingOptions& options,
                             const ClipObserver& observer = {});

double TargetAccuracy(const TargetModel& target, const Dataset& data);

class BlackBoxApi {
 public:
  explicit BlackBoxApi(std::shared_ptr<const TargetModel> target);

  // Confidence vectors of the records with the sensitive value replaced by
  // `sensitive` (or left unchanged when it is empty). One row per record.
  Matrix Confidences(std::span<const Record> rows,
                     std::optional<int> sensitive = std::nullopt) const;
  int num_classes() const;

 protected:
  std::shared_ptr<const TargetModel> target_;
};

class WhiteBoxApi : public BlackBoxApi {
 public:
  using BlackBoxApi::BlackBoxApi;

  // Post-ReLU activations of every hidden neuron, columns ordered layer by
  // layer.
  Matrix Activations(std::span<const Record> rows,
                     std::optional<int> sensitive = std::nullopt) const;
  std::vector<int> layer_sizes() const;
  const Mlp& model() const { return target_->model; }
};

class ModelRelease {
 public:
  ModelRelease(std::shared_ptr<const TargetModel> target, ModelAccess granted);

  ModelAccess access() const { return granted_; }
  BlackBoxApi BlackBox() const;
  WhiteBoxApi WhiteBox() const;

 private:
  std::shared_ptr<const TargetModel> target_;
  ModelAccess granted_;
};

}  // namespace attrinf

#endif  // ATTRINF_TARGET_MODEL_H_
