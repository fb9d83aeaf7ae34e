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


// Remove-and-retrain and DP training, each evaluated against the attack
// suite with paired seeds so before/after differences reflect the defense.

#ifndef ATTRINF_DEFENSES_H_
#define ATTRINF_DEFENSES_H_

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "attrinf/dp.h"
#include "attrinf/pipeline.h"
#include "attrinf/target_model.h"

namespace attrinf {

struct RetrainResult {
  TargetModel model;
  Dataset reduced;  // train minus the removed records
  std::size_t removed = 0;
};

// Retrains on `train` without the records whose ids are in `vulnerable`,
// with the same options (and so the same seeds). Throws DataError when an id
// is not in `train` or when the removal empties a class present in `train`.
RetrainResult RemoveAndRetrain(const Dataset& train,
                               const std::set<std::size_t>& vulnerable,
                               const TargetTrainingOptions& options);

// Per-cell outcome of one phase: PPV keyed by "<cell>/<attack>" plus the
// vulnerable candidate ids.
struct DefenseSnapshot {
  std::map<std::string, double> ppv;
  std::set<std::size_t> vulnerable;
};

DefenseSnapshot Snapshot(const CellOutcome& outcome, std::size_t k_index);

struct DefenseDeltaReport {
  std::map<std::string, double> ppv_delta;  // after - before
  std::size_t still_vulnerable = 0;         // in both
  std::size_t newly_vulnerable = 0;         // only after
  std::size_t no_longer_vulnerable = 0;     // only before
};

// Throws Error when the snapshots do not cover the same PPV keys.
DefenseDeltaReport DefenseDelta(const DefenseSnapshot& before,
                                const DefenseSnapshot& after);

struct DpDefenseReport {
  DpSchedule schedule;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::vector<CellOutcome> cells;
  std::vector<std::pair<std::string, std::string>> failures;  // cell, error
};

// Trains a DP model on `train` and runs every cell against it. `ctx.model` is
// replaced; `cell_seeds` pairs each cell with the seed used before training.
DpDefenseReport DpDefenseEval(const Dataset& train, const Dataset& test,
                              const TargetTrainingOptions& options,
                              const DpConfig& dp, CellContext ctx,
                              const std::vector<ThreatCell>& cells,
                              const std::vector<std::uint64_t>& cell_seeds,
                              const SuiteOptions& suite);

}  // namespace attrinf

#endif  // ATTRINF_DEFENSES_H_
