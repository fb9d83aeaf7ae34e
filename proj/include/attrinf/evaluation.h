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


// Metrics over attack outputs and the text tables that report them.

#ifndef ATTRINF_EVALUATION_H_
#define ATTRINF_EVALUATION_H_

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attrinf/attack_core.h"
#include "attrinf/tabular.h"

namespace attrinf {

// Fraction of positives among the top-k candidates of `scoring`. `labels`
// is aligned with scoring positions. Throws AttackError when k is 0 or
// exceeds the candidate count.
double PpvAtK(const AttackScoring& scoring, std::span<const int> labels,
              std::size_t k);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t n = 0;
};

// Summary of the present values; absent when none is present.
std::optional<MeanStd> Summarize(std::span<const double> values);

// "0.50 ± 0.04", or "NA".
std::string FormatMeanStd(const std::optional<MeanStd>& v, int digits = 2);

struct PpvCurve {
  std::string attack;
  std::string setting;
  std::vector<std::size_t> ks;  // ascending
  std::vector<double> mean;
  std::vector<double> std;
};

// per_trial[trial][j] is the PPV at ks[j].
PpvCurve MakePpvCurve(std::string attack, std::string setting,
                      std::vector<std::size_t> ks,
                      const std::vector<std::vector<double>>& per_trial);

// Columns: attack, setting, k, ppv_mean, ppv_std.
void WritePpvSeries(std::ostream& out, std::span<const PpvCurve> curves);

// --- Attribute prediction accuracy ------------------------------------------

using AttributeAttack = std::function<int(const Record& partial)>;

double PredictionAccuracy(std::span<const int> predicted,
                          std::span<const int> truth);
double AttackAccuracy(const AttributeAttack& attack,
                      const CandidateSet& candidates);

struct AccuracyTable {
  std::vector<std::string> sets;  // column names, e.g. train, test
  std::vector<std::pair<std::string, std::vector<double>>> rows;
};

// One row per attack plus a leading MostCommon row predicting
// `most_common` for everyone.
AccuracyTable MakeAccuracyTable(
    const std::vector<std::pair<std::string, AttributeAttack>>& attacks,
    int most_common,
    const std::vector<std::pair<std::string, const CandidateSet*>>& sets);

void WriteAccuracyTable(std::ostream& out, const AccuracyTable& table);

// --- Membership diagnostic --------------------------------------------------

struct TrainTestPpv {
  double train = 0.0;
  double test = 0.0;
  double gap() const { return train - test; }
};

using ScoringAttack = std::function<AttackScoring(const CandidateSet&)>;

TrainTestPpv TrainVsTestPpv(const ScoringAttack& attack,
                            const CandidateSet& train_candidates,
                            const CandidateSet& test_candidates, int target,
                            std::size_t k);

// --- Vulnerable region ------------------------------------------------------

inline constexpr double kRegionImputationMax = 0.3;
inline constexpr double kRegionSignalMin = 0.9;

struct VulnerableRegionReport {
  double imputation_max = kRegionImputationMax;
  double signal_min = kRegionSignalMin;
  std::vector<bool> in_region;     // per candidate
  std::vector<std::size_t> ids;    // members, candidate order
  std::size_t total = 0;
  std::size_t true_sensitive = 0;
  std::optional<double> ppv;       // absent for an empty region
};

// A candidate is in the region when imputation <= a and signal > b.
VulnerableRegionReport VulnerableRegion(std::span<const std::size_t> ids,
                                        const Vector& imputation,
                                        const Vector& signal,
                                        std::span<const int> labels,
                                        double a = kRegionImputationMax,
                                        double b = kRegionSignalMin);

// Columns: candidate_id, imputation, signal, label.
void WriteRegionMembers(std::ostream& out, const VulnerableRegionReport& r,
                        std::span<const std::size_t> ids,
                        const Vector& imputation, const Vector& signal,
                        std::span<const int> labels);

// --- Report tables ----------------------------------------------------------

// Rows keyed by one or more leading columns (e.g. attack, or phase and
// attack), one value column per setting, cells "mean ± std".
class ReportTable {
 public:
  ReportTable(std::vector<std::string> key_names,
              std::vector<std::string> columns);

  void Set(const std::vector<std::string>& key, const std::string& column,
           std::optional<MeanStd> value);
  std::optional<MeanStd> Get(const std::vector<std::string>& key,
                             const std::string& column) const;

  // Rows appear in insertion order.
  void Write(std::ostream& out, int digits = 2) const;

 private:
  std::vector<std::string> key_names_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> row_order_;
  std::map<std::vector<std::string>, std::map<std::string, MeanStd>> cells_;
};

}  // namespace attrinf

#endif  // ATTRINF_EVALUATION_H_
