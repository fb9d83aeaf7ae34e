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


// Config-driven experiment grid: trials x threat cells x attacks, optional
// DP and remove-and-retrain defenses, deterministic report files.
//
// Output layout under output_dir:
//   trials/<trial>/metrics.tsv                 phase cell attack metric k value
//   trials/<trial>/<phase>/<cell>/scores.tsv   per-candidate scores
//   trials/<trial>/<phase>/<cell>/neurons.tsv  white-box cells only
//   trials/<trial>/<phase>/<cell>/region.tsv   white-box cells only
//   failures.tsv                               trial phase cell error
//   tables/*.tsv                               aggregated by WriteReport

#ifndef ATTRINF_EXPERIMENT_H_
#define ATTRINF_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "attrinf/defenses.h"
#include "attrinf/dp.h"
#include "attrinf/pipeline.h"
#include "attrinf/synth.h"
#include "json.hpp"

namespace attrinf {

// Environment variable overriding ExperimentConfig::workers.
inline constexpr const char* kWorkersEnv = "ATTRINF_WORKERS";

struct DataSource {
  std::optional<std::string> csv;
  std::optional<std::string> schema;
  std::optional<SynthSpec> synthetic;
  std::optional<std::uint64_t> seed;  // synthetic only; defaults to the base seed
};

struct ExperimentConfig {
  DataSource data;
  std::string target_value;  // t*, a level of the sensitive attribute
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  TargetTrainingOptions model;
  std::optional<DpConfig> dp;
  ImputerConfig imputer;
  std::vector<ThreatCell> grid;
  std::size_t candidates = 0;
  std::optional<std::size_t> test_candidates;  // default: min(candidates, test)
  std::vector<std::string> attacks;
  std::vector<std::size_t> ks = {100};
  int top_neurons = 10;
  TreeParams tree;
  int tree_folds = 5;
  std::size_t skew_groups = 5;
  double region_imputation_max = kRegionImputationMax;
  double region_signal_min = kRegionSignalMin;
  bool remove_retrain = false;
  std::optional<std::size_t> retrain_cell;  // index into grid
  int trials = 5;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  int workers = 1;

  // Relative paths are resolved against `base_dir`. Throws ConfigError on
  // malformed JSON types or unknown keys; semantic checks are left to
  // ValidateConfig.
  static ExperimentConfig FromJson(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir = {});
  nlohmann::json ToJson() const;
};

ExperimentConfig LoadConfig(const std::string& path);

struct ConfigIssue {
  enum class Scope { kConfig, kCell };
  Scope scope = Scope::kConfig;
  std::string where;  // field name or cell key
  std::string message;
};

std::string ToString(const ConfigIssue& issue);

// Every cross-field constraint. Config-scope issues make the experiment
// unrunnable; cell-scope issues only doom the named cell.
std::vector<ConfigIssue> ValidateConfig(const ExperimentConfig& config);

// The data set every trial samples from.
Dataset LoadExperimentData(const ExperimentConfig& config);

SuiteOptions MakeSuiteOptions(const ExperimentConfig& config);

struct CellFailure {
  int trial = 0;
  std::string phase;
  std::string cell;
  std::string message;
};

struct PhaseOutcome {
  std::string phase;  // base, dp, retrain
  CellOutcome outcome;
};

struct RetrainSummary {
  std::string cell;
  std::size_t removed = 0;
  DefenseDeltaReport delta;  // vulnerable-set counts; PPV at the first k
};

// Before/after comparison of one cell under a defense at one k.
struct DefenseDeltaEntry {
  std::string phase;  // dp or retrain
  std::string cell;
  std::size_t k = 0;
  DefenseDeltaReport report;
};

struct TrialResult {
  int trial = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::vector<PhaseOutcome> outcomes;
  std::optional<DpSchedule> dp_schedule;
  double dp_train_accuracy = 0.0;
  double dp_test_accuracy = 0.0;
  std::vector<DefenseDeltaEntry> deltas;
  std::optional<RetrainSummary> retrain;
  std::vector<CellFailure> failures;
};

std::uint64_t TrialSeed(std::uint64_t base, int trial);

TrialResult RunTrial(const ExperimentConfig& config, const Dataset& data,
                     int trial);

void WriteTrialMetrics(std::ostream& out, const TrialResult& result,
                       const std::vector<std::size_t>& ks);

struct RunSummary {
  std::size_t cells = 0;  // attempted (trial, phase, cell) units
  std::vector<CellFailure> failures;
  bool ok() const { return failures.empty(); }
};

// Worker count from the config, overridden by kWorkersEnv when set.
int ResolveWorkers(const ExperimentConfig& config);

// Runs every trial, writes the per-trial files, the failures manifest and
// the report tables. Throws ConfigError when config-scope issues exist.
RunSummary RunExperiment(const ExperimentConfig& config);

// Aggregates trials/*/metrics.tsv under `dir` into dir/tables/.
void WriteReport(const std::filesystem::path& dir);

}  // namespace attrinf

#endif  // ATTRINF_EXPERIMENT_H_
