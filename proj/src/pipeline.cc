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

#include "attrinf/pipeline.h"

#include <algorithm>

#include "attrinf/blackbox.h"

namespace attrinf {
namespace {

struct AttackInfo {
  AttackKind kind;
  const char* name;
  const char* ascii;
  ModelAccess access;
  bool imputer;
  bool predicts;
};

constexpr AttackInfo kAttacks[] = {
    {AttackKind::kIP, "IP", "IP", ModelAccess::kNone, true, true},
    {AttackKind::kMostCommon, "MostCommon", "MostCommon", ModelAccess::kNone,
     false, true},
    {AttackKind::kFredrikson, "Fredrikson", "Fredrikson",
     ModelAccess::kBlackBox, false, true},
    {AttackKind::kYeom, "Yeom", "Yeom", ModelAccess::kBlackBox, false, true},
    {AttackKind::kCAI, "CAI", "CAI", ModelAccess::kBlackBox, false, true},
    {AttackKind::kWCAI, "WCAI", "WCAI", ModelAccess::kBlackBox, true, true},
    {AttackKind::kCSMIA, "CSMIA", "CSMIA", ModelAccess::kBlackBox, false, true},
    {AttackKind::kBB, "BB", "BB", ModelAccess::kBlackBox, false, false},
    {AttackKind::kBBIP, "BB·IP", "BB.IP", ModelAccess::kBlackBox, true, false},
    {AttackKind::kBBTree, "BB◊IP", "BB<>IP", ModelAccess::kBlackBox, true,
     false},
    {AttackKind::kWB, "WB", "WB", ModelAccess::kWhiteBox, false, false},
    {AttackKind::kWBIP, "WB·IP", "WB.IP", ModelAccess::kWhiteBox, true, false},
    {AttackKind::kWBTree, "WB◊IP", "WB<>IP", ModelAccess::kWhiteBox, true,
     false},
};

const AttackInfo& Info(AttackKind kind) {
  for (const AttackInfo& a : kAttacks) {
    if (a.kind == kind) return a;
  }
  throw Error("unregistered attack");
}

AttackScoring IndicatorScoring(AttackKind kind, const CandidateSet& c,
                               int target, std::span<const int> decisions) {
  AttackScoring s;
  s.attack = AttackName(kind);
  s.target = target;
  s.ids = c.ids();
  s.scores.resize(static_cast<Eigen::Index>(decisions.size()));
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    s.scores[static_cast<Eigen::Index>(i)] = decisions[i] == target ? 1.0 : 0.0;
  }
  return s;
}

// Lazily fitted attack state for one cell. Every model access goes through
// the handles minted by `release`.
class CellAttacker {
 public:
  struct Output {
    AttackScoring scoring;
    std::optional<std::vector<int>> decisions;
    std::size_t flagged = 0;
  };

  CellAttacker(const ModelRelease& release, const Dataset& aux, int target,
               const SuiteOptions& options, std::uint64_t seed)
      : release_(release),
        aux_(aux),
        target_(target),
        options_(options),
        seed_(seed) {}

  Output Run(AttackKind kind, const CandidateSet& c) {
    switch (kind) {
      case AttackKind::kIP: {
        const Matrix dist = imputer().Distributions(c.partial);
        std::vector<int> decisions;
        for (Eigen::Index i = 0; i < dist.rows(); ++i) {
          decisions.push_back(ArgmaxFirst(dist.row(i).transpose()));
        }
        Output out{ImputationScores(imputer(), c, target_), decisions, 0};
        return out;
      }
      case AttackKind::kMostCommon: {
        const int v = MostCommonBaseline(aux_);
        std::vector<int> decisions(c.size(), v);
        return {IndicatorScoring(kind, c, target_, decisions), decisions, 0};
      }
      case AttackKind::kFredrikson:
      case AttackKind::kYeom:
      case AttackKind::kCAI:
      case AttackKind::kWCAI:
      case AttackKind::kCSMIA:
        return RunValueAttack(kind, c);
      case AttackKind::kBB:
        return {BbScores(bb(), c, target_), std::nullopt, 0};
      case AttackKind::kBBIP:
        return {BbIpScores(bb(), imputer(), c, target_), std::nullopt, 0};
      case AttackKind::kBBTree:
        return {BbTreeScores(bb(), imputer(), bb_tree(), c, target_),
                std::nullopt, 0};
      case AttackKind::kWB:
        return {WbScores(wb(), wb_state(), c), std::nullopt, ShortFlag()};
      case AttackKind::kWBIP:
        return {WbIpScores(wb(), wb_state(), imputer(), c), std::nullopt,
                ShortFlag()};
      case AttackKind::kWBTree:
        return {WbTreeScores(wb(), wb_state(), imputer(), wb_tree(), c),
                std::nullopt, ShortFlag()};
    }
    throw Error("unregistered attack");
  }

  const Imputer& imputer() {
    if (!imputer_) {
      ImputerConfig cfg = options_.imputer;
      cfg.train.seed = DeriveSeed(seed_, 1, "imputer");
      imputer_ = TrainImputer(aux_, cfg);
    }
    return *imputer_;
  }

  bool has_imputer() const { return imputer_.has_value(); }
  bool has_whitebox() const { return wb_state_.has_value(); }
  const WhiteBoxState& wb_state() {
    if (!wb_state_) wb_state_ = FitWhiteBox(wb(), aux_, target_, options_.top_neurons);
    return *wb_state_;
  }
  const WhiteBoxApi& wb() {
    if (!wb_) wb_ = release_.WhiteBox();
    return *wb_;
  }

 private:
  const BlackBoxApi& bb() {
    if (!bb_) bb_ = release_.BlackBox();
    return *bb_;
  }
  const DecisionTree& bb_tree() {
    if (!bb_tree_) {
      bb_tree_ = FitConfidenceTree(bb(), aux_imputation(), aux_, target_,
                                   options_.tree);
    }
    return *bb_tree_;
  }
  const DecisionTree& wb_tree() {
    if (!wb_tree_) {
      wb_tree_ = FitWhiteBoxTree(wb(), wb_state(), aux_imputation(), aux_,
                                 options_.tree);
    }
    return *wb_tree_;
  }
  // Tree features for the aux records, shared by both trees.
  const Vector& aux_imputation() {
    if (!aux_imputation_) {
      if (options_.tree_folds < 2) {
        aux_imputation_ = ImputeProbs(imputer(), aux_.records, target_);
      } else {
        ImputerConfig cfg = options_.imputer;
        cfg.train.seed = DeriveSeed(seed_, 2, "tree-folds");
        aux_imputation_ =
            CrossFittedProbs(aux_, cfg, target_, options_.tree_folds);
      }
    }
    return *aux_imputation_;
  }
  std::size_t ShortFlag() {
    return wb_state().selection.short_selection() ? 1 : 0;
  }

  Output RunValueAttack(AttackKind kind, const CandidateSet& c) {
    const BlackBoxApi& api = bb();
    const int values = aux_.schema->num_sensitive_values();
    const QueryTable table = QueryAllValues(api, c.partial, values);
    const Vector prior = SensitivePrior(aux_);
    std::optional<ConfusionMatrix> confusion;
    std::optional<MembershipOracle> oracle;
    std::optional<Matrix> imputed;
    if (kind == AttackKind::kFredrikson) confusion = EstimateConfusion(api, aux_);
    if (kind == AttackKind::kYeom) oracle = CalibrateMembershipOracle(api, aux_);
    if (kind == AttackKind::kWCAI) imputed = imputer().Distributions(c.partial);
    std::vector<int> decisions;
    decisions.reserve(c.size());
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto& q = table[i];
      const int label = c.partial[i].label;
      AttackDecision d;
      switch (kind) {
        case AttackKind::kFredrikson:
          d = FredriksonDecide(*confusion, prior, q, label);
          flagged += d.fallback ? 1 : 0;
          break;
        case AttackKind::kYeom:
          d = YeomDecide(*oracle, prior, q);
          flagged += d.fallback ? 1 : 0;
          break;
        case AttackKind::kCAI:
          d.value = CaiDecide(q);
          break;
        case AttackKind::kWCAI:
          d.value = WcaiDecide(
              imputed->row(static_cast<Eigen::Index>(i)).transpose(), q);
          break;
        default:
          d = CsmiaDecide(q, label);
          flagged += d.branch == CsmiaBranch::kMixedMatch ? 1 : 0;
          break;
      }
      decisions.push_back(d.value);
    }
    return {IndicatorScoring(kind, c, target_, decisions), decisions, flagged};
  }

  const ModelRelease& release_;
  const Dataset& aux_;
  int target_;
  const SuiteOptions& options_;
  std::uint64_t seed_;
  std::optional<Imputer> imputer_;
  std::optional<BlackBoxApi> bb_;
  std::optional<WhiteBoxApi> wb_;
  std::optional<WhiteBoxState> wb_state_;
  std::optional<Vector> aux_imputation_;
  std::optional<DecisionTree> bb_tree_;
  std::optional<DecisionTree> wb_tree_;
};

}  // namespace

const std::vector<AttackKind>& AllAttacks() {
  static const std::vector<AttackKind> all = [] {
    std::vector<AttackKind> v;
    for (const AttackInfo& a : kAttacks) v.push_back(a.kind);
    return v;
  }();
  return all;
}

std::string AttackName(AttackKind kind) { return Info(kind).name; }

std::optional<AttackKind> ParseAttack(std::string_view name) {
  for (const AttackInfo& a : kAttacks) {
    if (name == a.name || name == a.ascii) return a.kind;
  }
  return std::nullopt;
}

ModelAccess RequiredAccess(AttackKind kind) { return Info(kind).access; }
bool NeedsImputer(AttackKind kind) { return Info(kind).imputer; }
bool PredictsValue(AttackKind kind) { return Info(kind).predicts; }

std::string ThreatCell::Key() const {
  return ToString(tag) + "-" + std::to_string(aux_size) + "-" +
         ToString(access);
}

const AttackResult* CellOutcome::Find(AttackKind kind) const {
  for (const AttackResult& a : attacks) {
    if (a.kind == kind) return &a;
  }
  return nullptr;
}

CellOutcome EvaluateCell(const CellContext& ctx, const ThreatCell& cell,
                         const SuiteOptions& options, std::uint64_t seed) {
  if (!ctx.pool || !ctx.candidates || !ctx.model) {
    throw ConfigError("cell context is incomplete");
  }
  DistributionSpec dist = DistributionSpec::Full();
  switch (cell.tag) {
    case DistributionTag::kFull:
      break;
    case DistributionTag::kHighPopulation:
      dist = SkewGroups(*ctx.pool, SkewMode::kHighestPopulation,
                        options.skew_groups);
      break;
    case DistributionTag::kLowPopulation:
      dist = SkewGroups(*ctx.pool, SkewMode::kLowestPopulation,
                        options.skew_groups);
      break;
    case DistributionTag::kCustom:
      throw ConfigError("custom distributions are not supported in a grid");
  }
  static const std::set<std::size_t> kNone;
  const AdversaryKnowledge adv =
      SampleAdversarySet(*ctx.pool, dist, cell.aux_size,
                         DeriveSeed(seed, 0, "aux"),
                         ctx.exclude ? *ctx.exclude : kNone);
  const ModelRelease release(ctx.model, cell.access);
  CellAttacker attacker(release, adv.aux, ctx.target, options, seed);

  CellOutcome out;
  out.cell = cell;
  out.aux_size = adv.aux.size();
  const std::vector<int> labels = ctx.candidates->Indicator(ctx.target);
  std::vector<int> test_labels;
  if (ctx.test_candidates) test_labels = ctx.test_candidates->Indicator(ctx.target);
  for (AttackKind kind : options.attacks) {
    CellAttacker::Output o = attacker.Run(kind, *ctx.candidates);
    AttackResult r;
    r.kind = kind;
    r.flagged = o.flagged;
    for (std::size_t k : options.ks) r.ppv.push_back(PpvAtK(o.scoring, labels, k));
    if (o.decisions) {
      r.accuracy_train = PredictionAccuracy(*o.decisions, ctx.candidates->truth);
    }
    if (ctx.test_candidates) {
      CellAttacker::Output t = attacker.Run(kind, *ctx.test_candidates);
      for (std::size_t k : options.ks) {
        r.ppv_test.push_back(PpvAtK(t.scoring, test_labels, k));
      }
      if (t.decisions) {
        r.accuracy_test =
            PredictionAccuracy(*t.decisions, ctx.test_candidates->truth);
      }
    }
    r.scoring = std::move(o.scoring);
    out.attacks.push_back(std::move(r));
  }
  if (attacker.has_whitebox()) {
    out.whitebox = attacker.wb_state();
    out.region_imputation =
        ImputeProbs(attacker.imputer(), ctx.candidates->partial, ctx.target);
    out.region_signal =
        WbSignals(attacker.wb(), attacker.wb_state(), ctx.candidates->partial);
    out.region_ids = ctx.candidates->ids();
    out.region_labels = labels;
    out.region = VulnerableRegion(out.region_ids, out.region_imputation,
                                  out.region_signal, labels,
                                  options.region_imputation_max,
                                  options.region_signal_min);
  }
  out.degenerate_imputer =
      attacker.has_imputer() && attacker.imputer().degenerate();
  return out;
}

}  // namespace attrinf
