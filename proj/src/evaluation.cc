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

#include "attrinf/evaluation.h"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "attrinf/format.h"

namespace attrinf {

double PpvAtK(const AttackScoring& scoring, std::span<const int> labels,
              std::size_t k) {
  if (labels.size() != scoring.size()) {
    throw AttackError("ppv: labels do not match candidates");
  }
  if (k == 0) throw AttackError("ppv: k must be >= 1");
  if (k > scoring.size()) {
    throw AttackError("ppv: k = " + std::to_string(k) + " exceeds " +
                      std::to_string(scoring.size()) + " candidates");
  }
  std::size_t hits = 0;
  for (std::size_t pos : TopKPositions(scoring, k)) hits += labels[pos] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(k);
}

std::optional<MeanStd> Summarize(std::span<const double> values) {
  if (values.empty()) return std::nullopt;
  MeanStd s;
  s.n = values.size();
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(s.n);
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(s.n));
  return s;
}

std::string FormatMeanStd(const std::optional<MeanStd>& v, int digits) {
  if (!v) return kAbsent;
  return FormatFixed(v->mean, digits) + " ± " + FormatFixed(v->std, digits);
}

PpvCurve MakePpvCurve(std::string attack, std::string setting,
                      std::vector<std::size_t> ks,
                      const std::vector<std::vector<double>>& per_trial) {
  if (!std::is_sorted(ks.begin(), ks.end())) {
    throw AttackError("ppv curve: k values must ascend");
  }
  PpvCurve c{std::move(attack), std::move(setting), std::move(ks), {}, {}};
  for (std::size_t j = 0; j < c.ks.size(); ++j) {
    std::vector<double> at_k;
    for (const auto& trial : per_trial) at_k.push_back(trial.at(j));
    const auto s = Summarize(at_k);
    c.mean.push_back(s ? s->mean : std::nan(""));
    c.std.push_back(s ? s->std : std::nan(""));
  }
  return c;
}

void WritePpvSeries(std::ostream& out, std::span<const PpvCurve> curves) {
  out << "attack\tsetting\tk\tppv_mean\tppv_std\n";
  for (const PpvCurve& c : curves) {
    for (std::size_t j = 0; j < c.ks.size(); ++j) {
      out << c.attack << '\t' << c.setting << '\t' << c.ks[j] << '\t'
          << FormatFixed(c.mean[j], 4) << '\t' << FormatFixed(c.std[j], 4)
          << '\n';
    }
  }
}

double PredictionAccuracy(std::span<const int> predicted,
                          std::span<const int> truth) {
  if (predicted.size() != truth.size() || truth.empty()) {
    throw AttackError("accuracy: predictions do not match truth");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    correct += predicted[i] == truth[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

double AttackAccuracy(const AttributeAttack& attack,
                      const CandidateSet& candidates) {
  std::vector<int> predicted;
  predicted.reserve(candidates.size());
  for (const Record& r : candidates.partial) predicted.push_back(attack(r));
  return PredictionAccuracy(predicted, candidates.truth);
}

AccuracyTable MakeAccuracyTable(
    const std::vector<std::pair<std::string, AttributeAttack>>& attacks,
    int most_common,
    const std::vector<std::pair<std::string, const CandidateSet*>>& sets) {
  AccuracyTable table;
  for (const auto& [name, set] : sets) table.sets.push_back(name);
  auto add = [&](const std::string& name, const AttributeAttack& attack) {
    std::vector<double> acc;
    for (const auto& [set_name, set] : sets) {
      acc.push_back(AttackAccuracy(attack, *set));
    }
    table.rows.emplace_back(name, std::move(acc));
  };
  add("MostCommon", [most_common](const Record&) { return most_common; });
  for (const auto& [name, attack] : attacks) add(name, attack);
  return table;
}

void WriteAccuracyTable(std::ostream& out, const AccuracyTable& table) {
  out << "attack";
  for (const auto& s : table.sets) out << '\t' << s;
  out << '\n';
  for (const auto& [name, acc] : table.rows) {
    out << name;
    for (double a : acc) out << '\t' << FormatFixed(a, 4);
    out << '\n';
  }
}

TrainTestPpv TrainVsTestPpv(const ScoringAttack& attack,
                            const CandidateSet& train_candidates,
                            const CandidateSet& test_candidates, int target,
                            std::size_t k) {
  TrainTestPpv r;
  r.train = PpvAtK(attack(train_candidates),
                   train_candidates.Indicator(target), k);
  r.test = PpvAtK(attack(test_candidates), test_candidates.Indicator(target),
                  k);
  return r;
}

VulnerableRegionReport VulnerableRegion(std::span<const std::size_t> ids,
                                        const Vector& imputation,
                                        const Vector& signal,
                                        std::span<const int> labels, double a,
                                        double b) {
  const auto n = ids.size();
  if (static_cast<std::size_t>(imputation.size()) != n ||
      static_cast<std::size_t>(signal.size()) != n || labels.size() != n) {
    throw AttackError("vulnerable region: inputs are not aligned");
  }
  VulnerableRegionReport r;
  r.imputation_max = a;
  r.signal_min = b;
  r.in_region.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const bool in = imputation[k] <= a && signal[k] > b;
    r.in_region[i] = in;
    if (!in) continue;
    r.ids.push_back(ids[i]);
    ++r.total;
    r.true_sensitive += labels[i] ? 1 : 0;
  }
  if (r.total > 0) {
    r.ppv = static_cast<double>(r.true_sensitive) /
            static_cast<double>(r.total);
  }
  return r;
}

void WriteRegionMembers(std::ostream& out, const VulnerableRegionReport& r,
                        std::span<const std::size_t> ids,
                        const Vector& imputation, const Vector& signal,
                        std::span<const int> labels) {
  out << "candidate_id\timputation\tsignal\tlabel\n";
  for (std::size_t i = 0; i < r.in_region.size(); ++i) {
    if (!r.in_region[i]) continue;
    const auto k = static_cast<Eigen::Index>(i);
    out << ids[i] << '\t' << FormatDouble(imputation[k]) << '\t'
        << FormatDouble(signal[k]) << '\t' << labels[i] << '\n';
  }
}

ReportTable::ReportTable(std::vector<std::string> key_names,
                         std::vector<std::string> columns)
    : key_names_(std::move(key_names)), columns_(std::move(columns)) {}

void ReportTable::Set(const std::vector<std::string>& key,
                      const std::string& column, std::optional<MeanStd> value) {
  if (key.size() != key_names_.size()) {
    throw Error("report table: key has the wrong arity");
  }
  if (std::find(columns_.begin(), columns_.end(), column) == columns_.end()) {
    throw Error("report table: unknown column " + column);
  }
  auto [it, inserted] = cells_.try_emplace(key);
  if (inserted) row_order_.push_back(key);
  if (value) {
    it->second[column] = *value;
  } else {
    it->second.erase(column);
  }
}

std::optional<MeanStd> ReportTable::Get(const std::vector<std::string>& key,
                                        const std::string& column) const {
  const auto row = cells_.find(key);
  if (row == cells_.end()) return std::nullopt;
  const auto cell = row->second.find(column);
  if (cell == row->second.end()) return std::nullopt;
  return cell->second;
}

void ReportTable::Write(std::ostream& out, int digits) const {
  for (std::size_t i = 0; i < key_names_.size(); ++i) {
    out << (i ? "\t" : "") << key_names_[i];
  }
  for (const auto& c : columns_) out << '\t' << c;
  out << '\n';
  for (const auto& key : row_order_) {
    for (std::size_t i = 0; i < key.size(); ++i) out << (i ? "\t" : "") << key[i];
    for (const auto& c : columns_) out << '\t' << FormatMeanStd(Get(key, c), digits);
    out << '\n';
  }
}

}  // namespace attrinf
