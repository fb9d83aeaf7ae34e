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

#include "attrinf/blackbox.h"

#include <algorithm>
#include <ostream>

#include "attrinf/format.h"

namespace attrinf {
namespace {

ValueQuery FromRow(const Matrix& conf, Eigen::Index row, int label) {
  ValueQuery q;
  q.v_true = conf(row, label);
  Eigen::Index arg = 0;
  q.v_pred = conf.row(row).maxCoeff(&arg);
  q.predicted = static_cast<int>(arg);
  return q;
}

// argmax over values of `score(t)`, ties to the earliest value.
template <typename F>
int ArgmaxBy(int n, F score) {
  int best = 0;
  double best_score = score(0);
  for (int t = 1; t < n; ++t) {
    const double s = score(t);
    if (s > best_score) {
      best = t;
      best_score = s;
    }
  }
  return best;
}

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

ValueQuery QueryConfidence(const BlackBoxApi& api, const Record& partial,
                           int value) {
  const Matrix conf = api.Confidences(std::span<const Record>(&partial, 1),
                                      value);
  return FromRow(conf, 0, partial.label);
}

QueryTable QueryAllValues(const BlackBoxApi& api,
                          std::span<const Record> partial, int num_values) {
  QueryTable table(partial.size(), std::vector<ValueQuery>(
                                       static_cast<std::size_t>(num_values)));
  for (int t = 0; t < num_values; ++t) {
    const Matrix conf = api.Confidences(partial, t);
    for (std::size_t i = 0; i < partial.size(); ++i) {
      table[i][static_cast<std::size_t>(t)] =
          FromRow(conf, static_cast<Eigen::Index>(i), partial[i].label);
    }
  }
  return table;
}

ConfusionMatrix EstimateConfusion(const BlackBoxApi& api, const Dataset& aux) {
  const int k = api.num_classes();
  ConfusionMatrix c;
  c.probs = Matrix::Zero(k, k);
  c.support.assign(static_cast<std::size_t>(k), 0);
  const Matrix conf = api.Confidences(aux.records);
  for (std::size_t i = 0; i < aux.size(); ++i) {
    Eigen::Index pred = 0;
    conf.row(static_cast<Eigen::Index>(i)).maxCoeff(&pred);
    const int y = aux.records[i].label;
    c.probs(y, pred) += 1.0;
    ++c.support[static_cast<std::size_t>(y)];
  }
  for (int y = 0; y < k; ++y) {
    if (c.support[static_cast<std::size_t>(y)] > 0) {
      c.probs.row(y) /= static_cast<double>(c.support[static_cast<std::size_t>(y)]);
    }
  }
  return c;
}

Vector SensitivePrior(const Dataset& aux) {
  Vector p = Vector::Zero(aux.schema->num_sensitive_values());
  if (aux.empty()) return p;
  for (const Record& r : aux.records) p[r.sensitive] += 1.0;
  return p / static_cast<double>(aux.size());
}

MembershipOracle CalibrateMembershipOracle(const BlackBoxApi& api,
                                           const Dataset& aux) {
  if (aux.empty()) throw AttackError("membership oracle: empty auxiliary set");
  const Matrix conf = api.Confidences(aux.records);
  std::vector<double> v;
  v.reserve(aux.size());
  for (std::size_t i = 0; i < aux.size(); ++i) {
    v.push_back(conf(static_cast<Eigen::Index>(i), aux.records[i].label));
  }
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  MembershipOracle oracle;
  oracle.threshold = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  return oracle;
}

AttackDecision FredriksonDecide(const ConfusionMatrix& confusion,
                                const Vector& prior,
                                std::span<const ValueQuery> queries,
                                int label) {
  const int n = static_cast<int>(queries.size());
  if (confusion.support.at(static_cast<std::size_t>(label)) == 0) {
    return {ArgmaxFirst(prior), true, CsmiaBranch::kUniqueMatch};
  }
  AttackDecision d;
  d.value = ArgmaxBy(n, [&](int t) {
    return prior[t] *
           confusion.probs(label, queries[static_cast<std::size_t>(t)].predicted);
  });
  return d;
}

AttackDecision YeomDecide(const MembershipOracle& oracle, const Vector& prior,
                          std::span<const ValueQuery> queries) {
  const int n = static_cast<int>(queries.size());
  bool any = false;
  for (const ValueQuery& q : queries) any = any || oracle.IsMember(q.v_true);
  if (!any) return {ArgmaxFirst(prior), true, CsmiaBranch::kUniqueMatch};
  AttackDecision d;
  d.value = ArgmaxBy(n, [&](int t) {
    return oracle.IsMember(queries[static_cast<std::size_t>(t)].v_true)
               ? prior[t]
               : -1.0;
  });
  return d;
}

int CaiDecide(std::span<const ValueQuery> queries) {
  return ArgmaxBy(static_cast<int>(queries.size()), [&](int t) {
    return queries[static_cast<std::size_t>(t)].v_true;
  });
}

int WcaiDecide(const Eigen::Ref<const Vector>& imputed,
               std::span<const ValueQuery> queries) {
  return ArgmaxBy(static_cast<int>(queries.size()), [&](int t) {
    return imputed[t] * queries[static_cast<std::size_t>(t)].v_true;
  });
}

AttackDecision CsmiaDecide(std::span<const ValueQuery> queries, int label) {
  const int n = static_cast<int>(queries.size());
  std::vector<int> matching;
  for (int t = 0; t < n; ++t) {
    if (queries[static_cast<std::size_t>(t)].predicted == label) {
      matching.push_back(t);
    }
  }
  AttackDecision d;
  if (matching.size() == 1) {
    d.branch = CsmiaBranch::kUniqueMatch;
    d.value = matching.front();
  } else if (matching.empty()) {
    d.branch = CsmiaBranch::kNoMatch;
    d.value = ArgmaxBy(n, [&](int t) {
      return -queries[static_cast<std::size_t>(t)].v_pred;
    });
  } else {
    d.branch = static_cast<int>(matching.size()) == n ? CsmiaBranch::kAllMatch
                                                      : CsmiaBranch::kMixedMatch;
    const auto m = static_cast<int>(matching.size());
    d.value = matching[static_cast<std::size_t>(ArgmaxBy(m, [&](int i) {
      return queries[static_cast<std::size_t>(
                         matching[static_cast<std::size_t>(i)])]
          .v_pred;
    }))];
  }
  return d;
}

namespace {

std::vector<ValueQuery> QueryOne(const BlackBoxApi& api, const Record& partial,
                                 int num_values) {
  return QueryAllValues(api, std::span<const Record>(&partial, 1),
                        num_values)[0];
}

}  // namespace

AttackDecision FredriksonAttack(const BlackBoxApi& api,
                                const ConfusionMatrix& confusion,
                                const Vector& prior, const Record& partial) {
  const auto q = QueryOne(api, partial, static_cast<int>(prior.size()));
  return FredriksonDecide(confusion, prior, q, partial.label);
}

AttackDecision YeomAttack(const BlackBoxApi& api, const MembershipOracle& oracle,
                          const Vector& prior, const Record& partial) {
  const auto q = QueryOne(api, partial, static_cast<int>(prior.size()));
  return YeomDecide(oracle, prior, q);
}

int CaiAttack(const BlackBoxApi& api, const Record& partial, int num_values) {
  return CaiDecide(QueryOne(api, partial, num_values));
}

int WcaiAttack(const BlackBoxApi& api, const Imputer& imputer,
               const Record& partial) {
  const auto q = QueryOne(api, partial, imputer.num_values());
  return WcaiDecide(imputer.Distribution(partial), q);
}

AttackDecision CsmiaAttack(const BlackBoxApi& api, const Record& partial,
                           int num_values) {
  return CsmiaDecide(QueryOne(api, partial, num_values), partial.label);
}

double BbScore(const BlackBoxApi& api, const Record& partial, int target) {
  return QueryConfidence(api, partial, target).v_true;
}

Vector ConfidenceAtLabel(const BlackBoxApi& api,
                         std::span<const Record> partial, int target) {
  const Matrix conf = api.Confidences(partial, target);
  Vector v(static_cast<Eigen::Index>(partial.size()));
  for (std::size_t i = 0; i < partial.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] =
        conf(static_cast<Eigen::Index>(i), partial[i].label);
  }
  return v;
}

AttackScoring BbScores(const BlackBoxApi& api, const CandidateSet& candidates,
                       int target) {
  return MakeScoring("BB", candidates, target,
                     ConfidenceAtLabel(api, candidates.partial, target));
}

AttackScoring BbIpScores(const BlackBoxApi& api, const Imputer& imputer,
                         const CandidateSet& candidates, int target) {
  const Vector v = ConfidenceAtLabel(api, candidates.partial, target);
  const Vector p = ImputeProbs(imputer, candidates.partial, target);
  return MakeScoring("BB·IP", candidates, target, p.cwiseProduct(v));
}

AttackScoring BbTreeScores(const BlackBoxApi& api, const Imputer& imputer,
                           const DecisionTree& tree,
                           const CandidateSet& candidates, int target) {
  const Vector v = ConfidenceAtLabel(api, candidates.partial, target);
  const Vector p = ImputeProbs(imputer, candidates.partial, target);
  Vector s(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    s[i] = TreeConfidence(tree, p[i], v[i]);
  }
  return MakeScoring("BB◊IP", candidates, target, std::move(s));
}

DecisionTree FitConfidenceTree(const BlackBoxApi& api,
                               const Vector& aux_imputation,
                               const Dataset& aux, int target,
                               const TreeParams& params) {
  if (static_cast<std::size_t>(aux_imputation.size()) != aux.size()) {
    throw AttackError("confidence tree: imputation does not match aux");
  }
  const Vector v = ConfidenceAtLabel(api, aux.records, target);
  const Vector& p = aux_imputation;
  std::vector<TreePoint> points;
  points.reserve(aux.size());
  for (std::size_t i = 0; i < aux.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    points.push_back({{p[k], v[k]}, aux.records[i].sensitive == target ? 1 : 0});
  }
  return FitTree(points, params);
}

AttackScoring ImputationScores(const Imputer& imputer,
                               const CandidateSet& candidates, int target) {
  return MakeScoring("IP", candidates, target,
                     ImputeProbs(imputer, candidates.partial, target));
}

void WriteScoreTable(std::ostream& out,
                     std::span<const AttackScoring> scorings) {
  out << "candidate_id\tattack\tscore\n";
  for (const AttackScoring& s : scorings) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << s.ids[i] << '\t' << s.attack << '\t'
          << FormatDouble(s.scores[static_cast<Eigen::Index>(i)]) << '\n';
    }
  }
}

}  // namespace attrinf
