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

#include "attrinf/tabular.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace attrinf {
namespace {

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string CsvEscape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

bool ParseDouble(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

int Attribute::LevelIndex(std::string_view value) const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] == value) return static_cast<int>(i);
  }
  return -1;
}

int AttributeSchema::SensitiveIndex(std::string_view value) const {
  return sensitive.LevelIndex(value);
}

void AttributeSchema::Validate() const {
  if (sensitive.name.empty()) {
    throw ConfigError("schema: exactly one attribute must be sensitive");
  }
  if (!sensitive.categorical() || sensitive.levels.size() < 2) {
    throw ConfigError("schema: sensitive attribute '" + sensitive.name +
                      "' must be categorical with at least two values");
  }
  if (label_name.empty()) throw ConfigError("schema: label_name is empty");
  if (group_key.empty()) throw ConfigError("schema: group_key is empty");
  if (num_classes < 2) throw ConfigError("schema: num_classes must be >= 2");
  std::set<std::string> names{sensitive.name, label_name, group_key};
  if (names.size() != 3) {
    throw ConfigError("schema: sensitive, label, and group columns collide");
  }
  for (const Attribute& a : features) {
    if (!names.insert(a.name).second) {
      throw ConfigError("schema: duplicate column '" + a.name + "'");
    }
    if (a.categorical() && a.levels.empty()) {
      throw ConfigError("schema: categorical attribute '" + a.name +
                        "' has no values");
    }
  }
}

AttributeSchema AttributeSchema::FromJson(const nlohmann::json& j) {
  AttributeSchema s;
  std::set<std::string> drop;
  if (j.contains("drop")) {
    for (const auto& d : j.at("drop")) drop.insert(d.get<std::string>());
  }
  int sensitive_count = 0;
  try {
    for (const auto& a : j.at("attributes")) {
      Attribute attr;
      attr.name = a.at("name").get<std::string>();
      const std::string kind = a.value("kind", "continuous");
      if (kind == "categorical") {
        attr.kind = AttributeKind::kCategorical;
        for (const auto& v : a.at("values")) {
          attr.levels.push_back(v.is_string() ? v.get<std::string>()
                                              : v.dump());
        }
      } else if (kind != "continuous") {
        throw ConfigError("schema: unknown attribute kind '" + kind + "'");
      }
      attr.dropped = a.value("dropped", false) || drop.count(attr.name) > 0;
      drop.erase(attr.name);
      if (a.value("sensitive", false)) {
        ++sensitive_count;
        if (attr.dropped) {
          throw ConfigError("schema: sensitive attribute cannot be dropped");
        }
        s.sensitive = std::move(attr);
      } else {
        s.features.push_back(std::move(attr));
      }
    }
    s.label_name = j.at("label_name").get<std::string>();
    s.num_classes = j.at("num_classes").get<int>();
    s.group_key = j.at("group_key").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("schema: ") + e.what());
  }
  if (sensitive_count != 1) {
    throw ConfigError("schema: exactly one attribute must be sensitive, got " +
                      std::to_string(sensitive_count));
  }
  if (!drop.empty()) {
    throw ConfigError("schema: drop names unknown attribute '" +
                      *drop.begin() + "'");
  }
  s.Validate();
  return s;
}

nlohmann::json AttributeSchema::ToJson() const {
  nlohmann::json attrs = nlohmann::json::array();
  auto emit = [&](const Attribute& a, bool is_sensitive) {
    nlohmann::json o;
    o["name"] = a.name;
    o["kind"] = a.categorical() ? "categorical" : "continuous";
    if (a.categorical()) o["values"] = a.levels;
    if (is_sensitive) o["sensitive"] = true;
    attrs.push_back(o);
  };
  std::vector<std::string> drop;
  for (const Attribute& a : features) {
    emit(a, false);
    if (a.dropped) drop.push_back(a.name);
  }
  emit(sensitive, true);
  return {{"attributes", attrs},
          {"label_name", label_name},
          {"num_classes", num_classes},
          {"group_key", group_key},
          {"drop", drop}};
}

AttributeSchema LoadSchema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("schema " + path + ": " + e.what());
  }
  return AttributeSchema::FromJson(j);
}

Dataset Dataset::Subset(std::span<const std::size_t> positions) const {
  Dataset out;
  out.schema = schema;
  out.records.reserve(positions.size());
  for (std::size_t p : positions) out.records.push_back(records.at(p));
  return out;
}

Dataset ParseDataset(std::istream& in,
                     std::shared_ptr<const AttributeSchema> schema) {
  const AttributeSchema& s = *schema;
  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV is empty");
  const std::vector<std::string> header = SplitCsvLine(line);
  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
  auto find = [&](const std::string& name) {
    auto it = column.find(name);
    if (it == column.end()) {
      throw DataError("CSV header is missing column '" + name + "'");
    }
    return it->second;
  };
  std::vector<std::size_t> feature_col;
  for (const Attribute& a : s.features) feature_col.push_back(find(a.name));
  const std::size_t sensitive_col = find(s.sensitive.name);
  const std::size_t label_col = find(s.label_name);
  const std::size_t group_col = find(s.group_key);

  Dataset data;
  data.schema = schema;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> fields = SplitCsvLine(line);
    const std::string where = "line " + std::to_string(line_no);
    if (fields.size() != header.size()) {
      throw DataError(where + ": expected " + std::to_string(header.size()) +
                      " fields, got " + std::to_string(fields.size()));
    }
    Record r;
    r.id = data.records.size();
    r.features.resize(s.features.size());
    for (std::size_t f = 0; f < s.features.size(); ++f) {
      const Attribute& a = s.features[f];
      const std::string& v = fields[feature_col[f]];
      if (v.empty()) {
        throw DataError(where + ": missing value for '" + a.name + "'");
      }
      if (a.categorical()) {
        const int level = a.LevelIndex(v);
        if (level < 0) {
          throw DataError(where + ": unknown level '" + v + "' for '" +
                          a.name + "'");
        }
        r.features[f] = level;
      } else if (!ParseDouble(v, r.features[f])) {
        throw DataError(where + ": '" + v + "' is not a number for '" +
                        a.name + "'");
      }
    }
    const std::string& t = fields[sensitive_col];
    r.sensitive = s.SensitiveIndex(t);
    if (r.sensitive < 0) {
      throw DataError(where + ": unknown level '" + t + "' for '" +
                      s.sensitive.name + "'");
    }
    double label = 0;
    if (!ParseDouble(fields[label_col], label) || label != std::floor(label) ||
        label < 0 || label >= s.num_classes) {
      throw DataError(where + ": label '" + fields[label_col] +
                      "' outside [0, " + std::to_string(s.num_classes) + ")");
    }
    r.label = static_cast<int>(label);
    r.group = fields[group_col];
    if (r.group.empty()) throw DataError(where + ": missing group id");
    data.records.push_back(std::move(r));
  }
  return data;
}

Dataset LoadDataset(const std::string& path,
                    std::shared_ptr<const AttributeSchema> schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file " + path);
  return ParseDataset(in, std::move(schema));
}

void WriteDataset(std::ostream& out, const Dataset& data) {
  const AttributeSchema& s = *data.schema;
  for (const Attribute& a : s.features) out << CsvEscape(a.name) << ',';
  out << CsvEscape(s.sensitive.name) << ',' << CsvEscape(s.label_name) << ','
      << CsvEscape(s.group_key) << '\n';
  for (const Record& r : data.records) {
    for (std::size_t f = 0; f < s.features.size(); ++f) {
      const Attribute& a = s.features[f];
      if (a.categorical()) {
        out << CsvEscape(a.levels[static_cast<std::size_t>(r.features[f])]);
      } else {
        out << FormatDouble(r.features[f]);
      }
      out << ',';
    }
    out << CsvEscape(s.sensitive.levels[static_cast<std::size_t>(r.sensitive)])
        << ',' << r.label << ',' << CsvEscape(r.group) << '\n';
  }
}

// --- Encoding --------------------------------------------------------------

EncodingBlock Encoding::MakeCategorical(int feature, const Attribute& attr,
                                        std::span<const Record> rows) const {
  std::vector<bool> seen(attr.levels.size(), false);
  for (const Record& r : rows) {
    const int level = feature < 0 ? r.sensitive
                                  : static_cast<int>(r.features[feature]);
    if (level >= 0 && level < static_cast<int>(seen.size())) seen[level] = true;
  }
  EncodingBlock b;
  b.feature = feature;
  b.categorical = true;
  b.slot_of_level.assign(attr.levels.size(), -1);
  for (std::size_t l = 0; l < seen.size(); ++l) {
    if (seen[l]) b.slot_of_level[l] = b.width++;
  }
  return b;
}

Encoding Encoding::Fit(const Dataset& data, EncodingOptions options) {
  if (!data.schema) throw DataError("encoding: data set has no schema");
  Encoding e;
  e.schema_ = data.schema;
  e.options_ = options;
  const AttributeSchema& s = *data.schema;
  const std::span<const Record> rows(data.records);
  for (std::size_t f = 0; f < s.features.size(); ++f) {
    const Attribute& a = s.features[f];
    if (a.dropped) continue;
    if (a.categorical()) {
      e.blocks_.push_back(e.MakeCategorical(static_cast<int>(f), a, rows));
      continue;
    }
    EncodingBlock b;
    b.feature = static_cast<int>(f);
    b.width = 1;
    if (!rows.empty()) {
      double sum = 0.0;
      for (const Record& r : rows) sum += r.features[f];
      b.mean = sum / static_cast<double>(rows.size());
      double ss = 0.0;
      for (const Record& r : rows) {
        const double d = r.features[f] - b.mean;
        ss += d * d;
      }
      const double sd = std::sqrt(ss / static_cast<double>(rows.size()));
      b.stddev = sd > 0.0 ? sd : 1.0;
    }
    e.blocks_.push_back(std::move(b));
  }
  if (options.include_sensitive) {
    e.sensitive_block_ = static_cast<int>(e.blocks_.size());
    e.blocks_.push_back(e.MakeCategorical(-1, s.sensitive, rows));
  }
  if (options.include_label) {
    // Every class gets a slot so the imputer sees a fixed-width label code.
    EncodingBlock b;
    b.categorical = true;
    b.width = s.num_classes;
    b.slot_of_level.resize(static_cast<std::size_t>(s.num_classes));
    std::iota(b.slot_of_level.begin(), b.slot_of_level.end(), 0);
    e.label_block_ = static_cast<int>(e.blocks_.size());
    e.blocks_.push_back(std::move(b));
  }
  int offset = 0;
  for (EncodingBlock& b : e.blocks_) {
    b.offset = offset;
    offset += b.width;
  }
  e.width_ = offset;
  return e;
}

int Encoding::EncodeInto(const Record& r, std::optional<int> sensitive,
                         Eigen::Ref<RowVector> out) const {
  out.setZero();
  int unseen = 0;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const EncodingBlock& b = blocks_[i];
    if (!b.categorical) {
      out[b.offset] = (r.features[b.feature] - b.mean) / b.stddev;
      continue;
    }
    int level;
    if (static_cast<int>(i) == sensitive_block_) {
      level = sensitive.value_or(r.sensitive);
    } else if (static_cast<int>(i) == label_block_) {
      level = r.label;
    } else {
      level = static_cast<int>(r.features[b.feature]);
    }
    const int slot = level >= 0 &&
                             level < static_cast<int>(b.slot_of_level.size())
                         ? b.slot_of_level[level]
                         : -1;
    if (slot < 0) {
      ++unseen;
    } else {
      out[b.offset + slot] = 1.0;
    }
  }
  return unseen;
}

RowVector Encoding::Encode(const Record& r, std::optional<int> sensitive) const {
  RowVector out(width_);
  EncodeInto(r, sensitive, out);
  return out;
}

Matrix Encoding::Encode(std::span<const Record> rows,
                        std::optional<int> sensitive) const {
  Matrix out(static_cast<Eigen::Index>(rows.size()), width_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    RowVector row(width_);
    EncodeInto(rows[i], sensitive, row);
    out.row(static_cast<Eigen::Index>(i)) = row;
  }
  return out;
}

int Encoding::DecodeCategorical(int feature, const RowVector& row) const {
  for (const EncodingBlock& b : blocks_) {
    if (!b.categorical || b.feature != feature) continue;
    for (std::size_t l = 0; l < b.slot_of_level.size(); ++l) {
      const int slot = b.slot_of_level[l];
      if (slot >= 0 && row[b.offset + slot] == 1.0) return static_cast<int>(l);
    }
    return -1;
  }
  throw DataError("encoding: feature " + std::to_string(feature) +
                  " is not an encoded categorical attribute");
}

EncodedDataset ApplyEncoding(const Dataset& data, const Encoding& encoding) {
  EncodedDataset out;
  out.x.resize(static_cast<Eigen::Index>(data.size()), encoding.width());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Record& r = data.records[i];
    RowVector row(encoding.width());
    out.unseen_levels += encoding.EncodeInto(r, std::nullopt, row);
    out.x.row(static_cast<Eigen::Index>(i)) = row;
    out.labels.push_back(r.label);
    out.sensitive.push_back(r.sensitive);
    out.groups.push_back(r.group);
  }
  return out;
}

// --- Sampling --------------------------------------------------------------

std::vector<std::size_t> SampleWithoutReplacement(std::size_t n,
                                                  std::size_t count, Rng& rng) {
  if (count > n) {
    throw DataError("cannot sample " + std::to_string(count) + " of " +
                    std::to_string(n) + " rows");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(count);
  return idx;
}

Split SampleSplit(const Dataset& data, std::uint64_t seed, std::size_t n_train,
                  std::size_t n_test) {
  if (n_train + n_test > data.size()) {
    throw DataError("split needs " + std::to_string(n_train + n_test) +
                    " rows, data set has " + std::to_string(data.size()));
  }
  Rng rng(seed);
  const auto picked = SampleWithoutReplacement(data.size(), n_train + n_test,
                                               rng);
  const std::span<const std::size_t> all(picked);
  return {data.Subset(all.first(n_train)), data.Subset(all.subspan(n_train))};
}

std::vector<std::size_t> CandidateSet::ids() const {
  std::vector<std::size_t> out;
  out.reserve(partial.size());
  for (const Record& r : partial) out.push_back(r.id);
  return out;
}

std::vector<int> CandidateSet::Indicator(int target) const {
  std::vector<int> out;
  out.reserve(truth.size());
  for (int t : truth) out.push_back(t == target ? 1 : 0);
  return out;
}

CandidateSet AsCandidates(const Dataset& data) {
  CandidateSet c;
  c.partial = data.records;
  for (Record& r : c.partial) {
    c.truth.push_back(r.sensitive);
    r.sensitive = kMaskedSensitive;
  }
  return c;
}

CandidateSet SampleCandidates(const Dataset& train, std::size_t m,
                              std::uint64_t seed) {
  if (m > train.size()) {
    throw DataError("cannot sample " + std::to_string(m) +
                    " candidates from " + std::to_string(train.size()) +
                    " training records");
  }
  Rng rng(seed);
  const auto picked = SampleWithoutReplacement(train.size(), m, rng);
  return AsCandidates(train.Subset(picked));
}

std::string ToString(DistributionTag tag) {
  switch (tag) {
    case DistributionTag::kFull:
      return "D";
    case DistributionTag::kHighPopulation:
      return "D_HP";
    case DistributionTag::kLowPopulation:
      return "D_LP";
    case DistributionTag::kCustom:
      return "custom";
  }
  return "?";
}

DistributionTag ParseDistributionTag(std::string_view s) {
  if (s == "D") return DistributionTag::kFull;
  if (s == "D_HP") return DistributionTag::kHighPopulation;
  if (s == "D_LP") return DistributionTag::kLowPopulation;
  if (s == "custom") return DistributionTag::kCustom;
  throw ConfigError("unknown distribution tag '" + std::string(s) + "'");
}

std::string ToString(ModelAccess access) {
  switch (access) {
    case ModelAccess::kNone:
      return "none";
    case ModelAccess::kBlackBox:
      return "blackbox";
    case ModelAccess::kWhiteBox:
      return "whitebox";
  }
  return "?";
}

ModelAccess ParseModelAccess(std::string_view s) {
  if (s == "none") return ModelAccess::kNone;
  if (s == "blackbox") return ModelAccess::kBlackBox;
  if (s == "whitebox") return ModelAccess::kWhiteBox;
  throw ConfigError("unknown model access '" + std::string(s) + "'");
}

DistributionSpec SkewGroups(const Dataset& pool, SkewMode mode,
                            std::size_t count) {
  std::map<std::string, std::size_t> sizes;
  for (const Record& r : pool.records) ++sizes[r.group];
  if (count == 0 || count > sizes.size()) {
    throw DataError("skew: requested " + std::to_string(count) +
                    " groups, pool has " + std::to_string(sizes.size()));
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(sizes.begin(),
                                                          sizes.end());
  const bool lowest = mode == SkewMode::kLowestPopulation;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [lowest](const auto& a, const auto& b) {
                     if (a.second != b.second) {
                       return lowest ? a.second < b.second
                                     : a.second > b.second;
                     }
                     return a.first < b.first;
                   });
  DistributionSpec spec;
  spec.mode = DistributionSpec::Mode::kGroupSubset;
  spec.tag = lowest ? DistributionTag::kLowPopulation
                    : DistributionTag::kHighPopulation;
  for (std::size_t i = 0; i < count; ++i) {
    spec.selected_groups.insert(ranked[i].first);
  }
  return spec;
}

AdversaryKnowledge SampleAdversarySet(const Dataset& pool,
                                      const DistributionSpec& dist,
                                      std::size_t size, std::uint64_t seed,
                                      const std::set<std::size_t>& exclude) {
  if (dist.mode == DistributionSpec::Mode::kGroupSubset &&
      dist.selected_groups.empty()) {
    throw ConfigError("group-subset distribution selects no groups");
  }
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const Record& r = pool.records[i];
    if (exclude.count(r.id)) continue;
    if (dist.mode == DistributionSpec::Mode::kGroupSubset &&
        !dist.selected_groups.count(r.group)) {
      continue;
    }
    eligible.push_back(i);
  }
  if (eligible.size() < size) {
    throw DataError("adversary pool exhausted: need " + std::to_string(size) +
                    " records, " + std::to_string(eligible.size()) +
                    " eligible under " + ToString(dist.tag));
  }
  Rng rng(seed);
  const auto picked = SampleWithoutReplacement(eligible.size(), size, rng);
  std::vector<std::size_t> positions;
  positions.reserve(size);
  for (std::size_t p : picked) positions.push_back(eligible[p]);
  AdversaryKnowledge adv;
  adv.aux = pool.Subset(positions);
  adv.tag = dist.tag;
  adv.size = size;
  return adv;
}

FlipResult FlipSensitive(std::span<const Record> records, int target) {
  FlipResult out;
  out.records.assign(records.begin(), records.end());
  out.was_target.reserve(records.size());
  for (Record& r : out.records) {
    out.was_target.push_back(r.sensitive == target ? 1 : 0);
    r.sensitive = target;
  }
  return out;
}

}  // namespace attrinf
