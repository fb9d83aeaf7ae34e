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


// One threat-model cell of an experiment: sample D_aux, fit every requested
// attack on it, score the candidate sets and collect metrics. Shared by the
// experiment runner and the defenses.

#ifndef ATTRINF_PIPELINE_H_
#define ATTRINF_PIPELINE_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "attrinf/attack_core.h"
#include "attrinf/evaluation.h"
#include "attrinf/imputation.h"
#include "attrinf/tabular.h"
#include "attrinf/target_model.h"
#include "attrinf/whitebox.h"

namespace attrinf {

enum class AttackKind {
  kIP,
  kMostCommon,
  kFredrikson,
  kYeom,
  kCAI,
  kWCAI,
  kCSMIA,
  kBB,
  kBBIP,
  kBBTree,
  kWB,
  kWBIP,
  kWBTree,
};

const std::vector<AttackKind>& AllAttacks();
std::string AttackName(AttackKind kind);
// Accepts the registered names plus ASCII spellings ("BB.IP", "BB<>IP").
std::optional<AttackKind> ParseAttack(std::string_view name);
ModelAccess RequiredAccess(AttackKind kind);
bool NeedsImputer(AttackKind kind);
// Attribute-inference attacks predict a value for every candidate; their
// ranking score is 1 when the prediction equals t*, else 0.
bool PredictsValue(AttackKind kind);

struct ThreatCell {
  DistributionTag tag = DistributionTag::kFull;
  std::size_t aux_size = 0;
  ModelAccess access = ModelAccess::kWhiteBox;

  // e.g. "D_HP-200-whitebox"
  std::string Key() const;
};

struct SuiteOptions {
  std::vector<AttackKind> attacks;
  std::vector<std::size_t> ks = {100};
  int top_neurons = 10;
  TreeParams tree;
  // Folds for the cross-fitted imputation the trees are fitted on; below 2
  // the trees see the imputer's in-sample output.
  int tree_folds = 5;
  ImputerConfig imputer;
  std::size_t skew_groups = 5;
  double region_imputation_max = kRegionImputationMax;
  double region_signal_min = kRegionSignalMin;
};

// Everything a cell reads. Pointers must outlive the call.
struct CellContext {
  const Dataset* pool = nullptr;             // D_aux is sampled from here
  const std::set<std::size_t>* exclude = nullptr;  // ids never in D_aux
  std::shared_ptr<const TargetModel> model;
  const CandidateSet* candidates = nullptr;
  const CandidateSet* test_candidates = nullptr;  // optional
  int target = 0;
};

struct AttackResult {
  AttackKind kind = AttackKind::kIP;
  AttackScoring scoring;                 // training candidates
  std::vector<double> ppv;               // aligned with SuiteOptions::ks
  std::vector<double> ppv_test;          // empty without test candidates
  std::optional<double> accuracy_train;  // value-predicting attacks only
  std::optional<double> accuracy_test;
  std::size_t flagged = 0;  // fallbacks, mixed CSMIA matches, short selection
};

struct CellOutcome {
  ThreatCell cell;
  std::size_t aux_size = 0;
  bool degenerate_imputer = false;
  std::vector<AttackResult> attacks;
  std::optional<WhiteBoxState> whitebox;
  // Present when the cell computed both imputation and white-box signals.
  std::optional<VulnerableRegionReport> region;
  std::vector<std::size_t> region_ids;  // every candidate, candidate order
  Vector region_imputation;
  Vector region_signal;
  std::vector<int> region_labels;

  const AttackResult* Find(AttackKind kind) const;
};

// Throws on any failure; the caller records it against the cell.
CellOutcome EvaluateCell(const CellContext& ctx, const ThreatCell& cell,
                         const SuiteOptions& options, std::uint64_t seed);

}  // namespace attrinf

#endif  // ATTRINF_PIPELINE_H_
