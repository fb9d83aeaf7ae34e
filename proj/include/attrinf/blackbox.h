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

// Attacks that only see confidence vectors.
//
// Attribute-inference attacks return one sensitive value per candidate
// (Fredrikson, Yeom, CAI, WCAI, CSMIA). Sensitive-value-inference attacks
// return a score per candidate for a fixed target value t*:
//   BB      V_y(psi(z), t*)
//   BB·IP   Pr[t* | psi(z)] * V_y
//   BB◊IP   tree(Pr[t* | psi(z)], V_y)
// Each decision rule is exposed both as a pure function over query results
// and as a wrapper that performs the queries.

#ifndef ATTRINF_BLACKBOX_H_
#define ATTRINF_BLACKBOX_H_

#include <iosfwd>
#include <span>
#include <vector>

#include "attrinf/attack_core.h"
#include "attrinf/imputation.h"
#include "attrinf/target_model.h"

namespace attrinf {

// Model response to one plugged-in sensitive value.
struct ValueQuery {
  double v_true = 0.0;   // confidence at the candidate's label, V_y
  int predicted = 0;     // y'
  double v_pred = 0.0;   // V_{y'}
};

ValueQuery QueryConfidence(const BlackBoxApi& api, const Record& partial,
                           int value);

// queries[i][t] for every record i and every sensitive value t.
using QueryTable = std::vector<std::vector<ValueQuery>>;
QueryTable QueryAllValues(const BlackBoxApi& api,
                          std::span<const Record> partial, int num_values);

// C[y, y'] = Pr[model predicts y' | true label y], estimated on `aux`.
struct ConfusionMatrix {
  Matrix probs;
  std::vector<int> support;  // records with each true label
};

ConfusionMatrix EstimateConfusion(const BlackBoxApi& api, const Dataset& aux);

// Marginal Pr[t] on `aux`.
Vector SensitivePrior(const Dataset& aux);

struct MembershipOracle {
  double threshold = 0.5;
  bool IsMember(double v_true) const { return v_true >= threshold; }
};

// Threshold = median V_y of the model on `aux` with its true values.
MembershipOracle CalibrateMembershipOracle(const BlackBoxApi& api,
                                           const Dataset& aux);

enum class CsmiaBranch { kUniqueMatch, kNoMatch, kAllMatch, kMixedMatch };

struct AttackDecision {
  int value = 0;
  bool fallback = false;  // the rule was undefined and fell back to the prior
  CsmiaBranch branch = CsmiaBranch::kUniqueMatch;  // CSMIA only
};

AttackDecision FredriksonDecide(const ConfusionMatrix& confusion,
                                const Vector& prior,
                                std::span<const ValueQuery> queries, int label);
AttackDecision YeomDecide(const MembershipOracle& oracle, const Vector& prior,
                          std::span<const ValueQuery> queries);
int CaiDecide(std::span<const ValueQuery> queries);
int WcaiDecide(const Eigen::Ref<const Vector>& imputed,
               std::span<const ValueQuery> queries);
AttackDecision CsmiaDecide(std::span<const ValueQuery> queries, int label);

AttackDecision FredriksonAttack(const BlackBoxApi& api,
                                const ConfusionMatrix& confusion,
                                const Vector& prior, const Record& partial);
AttackDecision YeomAttack(const BlackBoxApi& api, const MembershipOracle& oracle,
                          const Vector& prior, const Record& partial);
int CaiAttack(const BlackBoxApi& api, const Record& partial, int num_values);
int WcaiAttack(const BlackBoxApi& api, const Imputer& imputer,
               const Record& partial);
AttackDecision CsmiaAttack(const BlackBoxApi& api, const Record& partial,
                           int num_values);

// --- Sensitive value inference ---------------------------------------------

double BbScore(const BlackBoxApi& api, const Record& partial, int target);

// V_y of every candidate queried with t*.
Vector ConfidenceAtLabel(const BlackBoxApi& api,
                         std::span<const Record> partial, int target);

AttackScoring BbScores(const BlackBoxApi& api, const CandidateSet& candidates,
                       int target);
AttackScoring BbIpScores(const BlackBoxApi& api, const Imputer& imputer,
                         const CandidateSet& candidates, int target);
AttackScoring BbTreeScores(const BlackBoxApi& api, const Imputer& imputer,
                           const DecisionTree& tree,
                           const CandidateSet& candidates, int target);

// Tree on the known set U = aux: features (Pr[t* | .], V_y), label t == t*.
// `aux_imputation` holds Pr[t* | .] for every aux record, normally
// cross-fitted so the tree does not learn from in-sample imputations.
DecisionTree FitConfidenceTree(const BlackBoxApi& api,
                               const Vector& aux_imputation,
                               const Dataset& aux, int target,
                               const TreeParams& params);

// Imputation alone as a score: Pr[t* | psi(z)].
AttackScoring ImputationScores(const Imputer& imputer,
                               const CandidateSet& candidates, int target);

// Tab-separated "candidate_id, attack, score" rows.
void WriteScoreTable(std::ostream& out,
                     std::span<const AttackScoring> scorings);

}  // namespace attrinf

#endif  // ATTRINF_BLACKBOX_H_
