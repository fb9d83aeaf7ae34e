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

#include "attrinf/target_model.h"

namespace attrinf {

TargetModel TrainTargetModel(const Dataset& train,
                             const TargetTrainingOptions& options,
                             const ClipObserver& observer) {
  if (train.empty()) throw DataError("target model: empty training set");
  TargetModel target;
  target.encoding = Encoding::Fit(train, {.include_sensitive = true});
  const Matrix x = target.encoding.Encode(train.records);
  std::vector<int> y;
  y.reserve(train.size());
  for (const Record& r : train.records) y.push_back(r.label);
  const MlpSpec spec{.input_dim = target.encoding.width(),
                     .hidden_dims = options.hidden_dims,
                     .num_classes = train.schema->num_classes};
  Mlp init = Mlp::Initialize(spec, DeriveSeed(options.train.seed, 0, "init"));
  target.model = options.dp ? TrainDp(std::move(init), x, y, options.train,
                                      *options.dp, observer)
                            : Train(std::move(init), x, y, options.train);
  return target;
}

double TargetAccuracy(const TargetModel& target, const Dataset& data) {
  std::vector<int> y;
  for (const Record& r : data.records) y.push_back(r.label);
  return Accuracy(target.model, target.encoding.Encode(data.records), y);
}

BlackBoxApi::BlackBoxApi(std::shared_ptr<const TargetModel> target)
    : target_(std::move(target)) {
  if (!target_) throw AccessViolation("no model released");
}

Matrix BlackBoxApi::Confidences(std::span<const Record> rows,
                                std::optional<int> sensitive) const {
  return target_->model.PredictProba(target_->encoding.Encode(rows, sensitive));
}

int BlackBoxApi::num_classes() const {
  return target_->model.spec().num_classes;
}

Matrix WhiteBoxApi::Activations(std::span<const Record> rows,
                                std::optional<int> sensitive) const {
  return target_->model.HiddenActivations(
      target_->encoding.Encode(rows, sensitive));
}

std::vector<int> WhiteBoxApi::layer_sizes() const {
  return target_->model.spec().hidden_dims;
}

ModelRelease::ModelRelease(std::shared_ptr<const TargetModel> target,
                           ModelAccess granted)
    : target_(std::move(target)), granted_(granted) {}

BlackBoxApi ModelRelease::BlackBox() const {
  if (granted_ == ModelAccess::kNone) {
    throw AccessViolation(
        "access violation: black-box queries need model access, threat model "
        "grants none");
  }
  return BlackBoxApi(target_);
}

WhiteBoxApi ModelRelease::WhiteBox() const {
  if (granted_ != ModelAccess::kWhiteBox) {
    throw AccessViolation(
        "access violation: white-box attack needs white-box access, threat "
        "model grants " +
        ToString(granted_));
  }
  return WhiteBoxApi(target_);
}

}  // namespace attrinf
