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

#include "attrinf/defenses.h"

#include <string>

namespace attrinf {

RetrainResult RemoveAndRetrain(const Dataset& train,
                               const std::set<std::size_t>& vulnerable,
                               const TargetTrainingOptions& options) {
  std::set<std::size_t> present;
  for (const Record& r : train.records) present.insert(r.id);
  for (std::size_t id : vulnerable) {
    if (!present.count(id)) {
      throw DataError("remove-and-retrain: record " + std::to_string(id) +
                      " is not in the training set");
    }
  }
  std::vector<std::size_t> keep;
  std::vector<int> before(static_cast<std::size_t>(train.schema->num_classes));
  std::vector<int> after(before.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const Record& r = train.records[i];
    ++before[static_cast<std::size_t>(r.label)];
    if (vulnerable.count(r.id)) continue;
    ++after[static_cast<std::size_t>(r.label)];
    keep.push_back(i);
  }
  for (std::size_t y = 0; y < before.size(); ++y) {
    if (before[y] > 0 && after[y] == 0) {
      throw DataError("remove-and-retrain: removal empties class " +
                      std::to_string(y));
    }
  }
  RetrainResult result;
  result.reduced = train.Subset(keep);
  result.removed = train.size() - keep.size();
  result.model = TrainTargetModel(result.reduced, options);
  return result;
}

DefenseSnapshot Snapshot(const CellOutcome& outcome, std::size_t k_index) {
  DefenseSnapshot s;
  const std::string cell = outcome.cell.Key();
  for (const AttackResult& a : outcome.attacks) {
    s.ppv[cell + "/" + AttackName(a.kind)] = a.ppv.at(k_index);
  }
  if (outcome.region) {
    s.vulnerable.insert(outcome.region->ids.begin(), outcome.region->ids.end());
  }
  return s;
}

DefenseDeltaReport DefenseDelta(const DefenseSnapshot& before,
                                const DefenseSnapshot& after) {
  if (before.ppv.size() != after.ppv.size()) {
    throw Error("defense delta: reports cover different cells");
  }
  DefenseDeltaReport d;
  for (const auto& [key, ppv] : before.ppv) {
    const auto it = after.ppv.find(key);
    if (it == after.ppv.end()) {
      throw Error("defense delta: " + key + " missing after the defense");
    }
    d.ppv_delta[key] = it->second - ppv;
  }
  for (std::size_t id : after.vulnerable) {
    (before.vulnerable.count(id) ? d.still_vulnerable : d.newly_vulnerable)++;
  }
  for (std::size_t id : before.vulnerable) {
    if (!after.vulnerable.count(id)) ++d.no_longer_vulnerable;
  }
  return d;
}

DpDefenseReport DpDefenseEval(const Dataset& train, const Dataset& test,
                              const TargetTrainingOptions& options,
                              const DpConfig& dp, CellContext ctx,
                              const std::vector<ThreatCell>& cells,
                              const std::vector<std::uint64_t>& cell_seeds,
                              const SuiteOptions& suite) {
  if (cells.size() != cell_seeds.size()) {
    throw ConfigError("dp defense: one seed per cell required");
  }
  TargetTrainingOptions private_options = options;
  private_options.dp = dp;
  auto model = std::make_shared<TargetModel>(
      TrainTargetModel(train, private_options));
  DpDefenseReport report;
  report.schedule = ResolveDpSchedule(dp, options.train, train.size());
  report.train_accuracy = TargetAccuracy(*model, train);
  if (!test.empty()) report.test_accuracy = TargetAccuracy(*model, test);
  ctx.model = model;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    try {
      report.cells.push_back(EvaluateCell(ctx, cells[i], suite, cell_seeds[i]));
    } catch (const std::exception& e) {
      report.failures.emplace_back(cells[i].Key(), e.what());
    }
  }
  return report;
}

}  // namespace attrinf
