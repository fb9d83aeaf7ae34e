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

// Tabular records, their schema, feature encoding, and every sampling
// primitive used to build a threat model (train/test split, candidate set,
// adversary auxiliary set, group-skewed distributions).

#ifndef ATTRINF_TABULAR_H_
#define ATTRINF_TABULAR_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "attrinf/common.h"
#include "json.hpp"

namespace attrinf {

enum class AttributeKind { kCategorical, kContinuous };

struct Attribute {
  std::string name;
  AttributeKind kind = AttributeKind::kContinuous;
  std::vector<std::string> levels;  // categorical only, declared order
  bool dropped = false;             // excluded from every encoding

  bool categorical() const { return kind == AttributeKind::kCategorical; }
  // Index of `value` in `levels`, or -1.
  int LevelIndex(std::string_view value) const;
};

// Column layout of a data set. The sensitive attribute is held apart from
// the non-sensitive features; it must be categorical and its level list is
// the support T of the attack.
struct AttributeSchema {
  std::vector<Attribute> features;  // non-sensitive attributes, in order
  Attribute sensitive;
  std::string label_name;
  int num_classes = 0;
  std::string group_key;

  const std::vector<std::string>& sensitive_values() const {
    return sensitive.levels;
  }
  int num_sensitive_values() const {
    return static_cast<int>(sensitive.levels.size());
  }
  int SensitiveIndex(std::string_view value) const;

  // Throws ConfigError if the schema is inconsistent.
  void Validate() const;

  static AttributeSchema FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

AttributeSchema LoadSchema(const std::string& path);

// Marks an unknown sensitive value in adversary-facing records.
inline constexpr int kMaskedSensitive = -1;

struct Record {
  std::size_t id = 0;            // row index in the source data set
  std::vector<double> features;  // aligned with schema.features; level index
                                 // for categorical attributes
  int sensitive = 0;             // index into schema.sensitive.levels
  int label = 0;
  std::string group;
};

struct Dataset {
  std::shared_ptr<const AttributeSchema> schema;
  std::vector<Record> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  const Record& operator[](std::size_t i) const { return records[i]; }

  // New data set with the same schema holding the selected rows.
  Dataset Subset(std::span<const std::size_t> positions) const;
};

// Parses a CSV file whose header names every schema column (any order).
// Throws DataError naming the offending line, column, or level.
Dataset LoadDataset(const std::string& path,
                    std::shared_ptr<const AttributeSchema> schema);
Dataset ParseDataset(std::istream& in,
                     std::shared_ptr<const AttributeSchema> schema);
void WriteDataset(std::ostream& out, const Dataset& data);

// --- Encoding --------------------------------------------------------------

struct EncodingOptions {
  bool include_sensitive = true;  // target model input
  bool include_label = false;     // imputer input
};

struct EncodingBlock {
  int feature = -1;  // index into schema.features; -1 for sensitive / label
  bool categorical = false;
  int offset = 0;
  int width = 0;
  std::vector<int> slot_of_level;  // -1 for levels unseen at fit time
  double mean = 0.0;
  double stddev = 1.0;
};

// One-hot categorical blocks plus z-scored continuous columns, fitted on a
// designated data set and applied unchanged to anything else.
class Encoding {
 public:
  Encoding() = default;

  static Encoding Fit(const Dataset& data, EncodingOptions options);

  int width() const { return width_; }
  const EncodingOptions& options() const { return options_; }
  const std::vector<EncodingBlock>& blocks() const { return blocks_; }
  const AttributeSchema& schema() const { return *schema_; }

  // Writes the encoding of `r` into `out` (size width()). When `sensitive`
  // is set it replaces r.sensitive. Returns the number of categorical
  // values that fell outside the fitted levels.
  int EncodeInto(const Record& r, std::optional<int> sensitive,
                 Eigen::Ref<RowVector> out) const;

  RowVector Encode(const Record& r,
                   std::optional<int> sensitive = std::nullopt) const;
  Matrix Encode(std::span<const Record> rows,
                std::optional<int> sensitive = std::nullopt) const;

  // Level index recovered from the one-hot block of `feature`, or -1 when
  // the block is all zero.
  int DecodeCategorical(int feature, const RowVector& row) const;

 private:
  EncodingBlock MakeCategorical(int feature, const Attribute& attr,
                                std::span<const Record> rows) const;

  std::shared_ptr<const AttributeSchema> schema_;
  EncodingOptions options_;
  std::vector<EncodingBlock> blocks_;
  int sensitive_block_ = -1;
  int label_block_ = -1;
  int width_ = 0;
};

struct EncodedDataset {
  Matrix x;
  std::vector<int> labels;
  std::vector<int> sensitive;
  std::vector<std::string> groups;
  std::size_t unseen_levels = 0;
};

inline Encoding FitEncoding(const Dataset& data, EncodingOptions options) {
  return Encoding::Fit(data, options);
}
EncodedDataset ApplyEncoding(const Dataset& data, const Encoding& encoding);

// --- Sampling --------------------------------------------------------------

// Uniform sample of `count` distinct positions out of [0, n).
std::vector<std::size_t> SampleWithoutReplacement(std::size_t n,
                                                  std::size_t count, Rng& rng);

struct Split {
  Dataset train;
  Dataset test;
};

Split SampleSplit(const Dataset& data, std::uint64_t seed, std::size_t n_train,
                  std::size_t n_test);

// Candidate records as the adversary sees them: sensitive value masked.
// `truth` holds the hidden values for evaluation only.
struct CandidateSet {
  std::vector<Record> partial;
  std::vector<int> truth;

  std::size_t size() const { return partial.size(); }
  std::vector<std::size_t> ids() const;
  // Binary labels truth == target.
  std::vector<int> Indicator(int target) const;
};

CandidateSet SampleCandidates(const Dataset& train, std::size_t m,
                              std::uint64_t seed);
// Every record of `data` as a candidate, in order.
CandidateSet AsCandidates(const Dataset& data);

enum class DistributionTag { kFull, kHighPopulation, kLowPopulation, kCustom };

std::string ToString(DistributionTag tag);
DistributionTag ParseDistributionTag(std::string_view s);

struct DistributionSpec {
  enum class Mode { kFull, kGroupSubset };
  Mode mode = Mode::kFull;
  std::set<std::string> selected_groups;
  DistributionTag tag = DistributionTag::kFull;

  static DistributionSpec Full() { return {}; }
};

enum class SkewMode { kLowestPopulation, kHighestPopulation };

// Ranks groups by record count (ties by group id) and keeps `count` of them
// from the requested end.
DistributionSpec SkewGroups(const Dataset& pool, SkewMode mode,
                            std::size_t count);

enum class ModelAccess { kNone, kBlackBox, kWhiteBox };

std::string ToString(ModelAccess access);
ModelAccess ParseModelAccess(std::string_view s);

// Everything the adversary holds besides the candidate set.
struct AdversaryKnowledge {
  Dataset aux;  // D_aux, complete records
  DistributionTag tag = DistributionTag::kFull;
  std::size_t size = 0;
  ModelAccess access = ModelAccess::kNone;
  int target = 0;  // t*
};

// Uniform sample from the records of `pool` allowed by `dist`, excluding
// any record whose id is in `exclude`.
AdversaryKnowledge SampleAdversarySet(const Dataset& pool,
                                      const DistributionSpec& dist,
                                      std::size_t size, std::uint64_t seed,
                                      const std::set<std::size_t>& exclude);

struct FlipResult {
  std::vector<Record> records;
  std::vector<int> was_target;  // 1 iff the original value equalled t*
};

FlipResult FlipSensitive(std::span<const Record> records, int target);

}  // namespace attrinf

#endif  // ATTRINF_TABULAR_H_
