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

#include "attrinf/experiment.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "attrinf/blackbox.h"
#include "attrinf/format.h"

namespace attrinf {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads the members of one JSON object and rejects keys nobody asked for.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  const json* Find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void Get(const std::string& key, T& out) {
    if (const json* v = Find(key)) out = Convert<T>(*v, key);
  }

  template <typename T>
  void Get(const std::string& key, std::optional<T>& out) {
    if (const json* v = Find(key)) out = Convert<T>(*v, key);
  }

  void Finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) {
        throw ConfigError(where_ + ": unknown key '" + key + "'");
      }
    }
  }

  std::string Path(const std::string& key) const { return where_ + "." + key; }

 private:
  template <typename T>
  T Convert(const json& v, const std::string& key) const {
    try {
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(Path(key) + ": " + e.what());
    }
  }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::string Resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute() || base.empty()) return path.string();
  return (base / path).lexically_normal().string();
}

void ReadTrain(Fields& f, TrainConfig& t, std::vector<int>& hidden) {
  f.Get("hidden_dims", hidden);
  f.Get("epochs", t.epochs);
  f.Get("batch_size", t.batch_size);
  f.Get("learning_rate", t.learning_rate);
  f.Get("min_steps", t.min_steps);
}

json TrainJson(const TrainConfig& t, const std::vector<int>& hidden) {
  return {{"hidden_dims", hidden},
          {"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"min_steps", t.min_steps}};
}

std::shared_ptr<const AttributeSchema> ConfigSchema(const ExperimentConfig& c) {
  if (c.data.synthetic) {
    return std::make_shared<AttributeSchema>(SynthSchema(*c.data.synthetic));
  }
  if (c.data.schema) {
    return std::make_shared<AttributeSchema>(LoadSchema(*c.data.schema));
  }
  throw ConfigError("data: no schema");
}

std::size_t ResolvedTestCandidates(const ExperimentConfig& c) {
  return c.test_candidates.value_or(std::min(c.candidates, c.test_size));
}

std::optional<std::size_t> RetrainCellIndex(const ExperimentConfig& c) {
  if (c.retrain_cell) return c.retrain_cell;
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    if (c.grid[i].access == ModelAccess::kWhiteBox) return i;
  }
  return std::nullopt;
}

bool HasWhiteBoxAttack(const std::vector<AttackKind>& attacks) {
  return std::any_of(attacks.begin(), attacks.end(), [](AttackKind k) {
    return RequiredAccess(k) == ModelAccess::kWhiteBox;
  });
}

std::vector<AttackKind> ParsedAttacks(const ExperimentConfig& c) {
  std::vector<AttackKind> out;
  for (const std::string& name : c.attacks) {
    const auto kind = ParseAttack(name);
    if (!kind) throw ConfigError("unknown attack '" + name + "'");
    out.push_back(*kind);
  }
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::FromJson(const json& j,
                                            const fs::path& base_dir) {
  ExperimentConfig c;
  Fields f(j, "config");
  if (const json* d = f.Find("data")) {
    Fields df(*d, "config.data");
    std::optional<std::string> csv, schema;
    df.Get("csv", csv);
    df.Get("schema", schema);
    if (csv) c.data.csv = Resolve(base_dir, *csv);
    if (schema) c.data.schema = Resolve(base_dir, *schema);
    if (const json* s = df.Find("synthetic")) {
      c.data.synthetic = SynthSpec::FromJson(*s);
    }
    df.Get("seed", c.data.seed);
    df.Finish();
  }
  f.Get("target_value", c.target_value);
  f.Get("train_size", c.train_size);
  f.Get("test_size", c.test_size);
  if (const json* m = f.Find("model")) {
    Fields mf(*m, "config.model");
    ReadTrain(mf, c.model.train, c.model.hidden_dims);
    mf.Finish();
  }
  if (const json* d = f.Find("dp")) {
    Fields df(*d, "config.dp");
    DpConfig dp;
    df.Get("clip_norm", dp.clip_norm);
    df.Get("noise_multiplier", dp.noise_multiplier);
    df.Get("target_epsilon", dp.target_epsilon);
    df.Get("delta", dp.delta);
    df.Finish();
    if (!dp.noise_multiplier && !dp.target_epsilon) dp.target_epsilon = 1.0;
    c.dp = dp;
  }
  if (const json* m = f.Find("imputer")) {
    Fields mf(*m, "config.imputer");
    ReadTrain(mf, c.imputer.train, c.imputer.hidden_dims);
    mf.Get("use_label_feature", c.imputer.use_label_feature);
    mf.Finish();
  }
  if (const json* g = f.Find("grid")) {
    if (!g->is_array()) throw ConfigError("config.grid: expected an array");
    for (std::size_t i = 0; i < g->size(); ++i) {
      Fields cf((*g)[i], "config.grid[" + std::to_string(i) + "]");
      ThreatCell cell;
      std::string tag = "D", access = "whitebox";
      cf.Get("distribution", tag);
      cf.Get("aux_size", cell.aux_size);
      cf.Get("access", access);
      cf.Finish();
      cell.tag = ParseDistributionTag(tag);
      cell.access = ParseModelAccess(access);
      c.grid.push_back(cell);
    }
  }
  f.Get("candidates", c.candidates);
  f.Get("test_candidates", c.test_candidates);
  f.Get("attacks", c.attacks);
  f.Get("k", c.ks);
  f.Get("top_neurons", c.top_neurons);
  if (const json* t = f.Find("tree")) {
    Fields tf(*t, "config.tree");
    tf.Get("max_depth", c.tree.max_depth);
    tf.Get("min_leaf", c.tree.min_leaf);
    tf.Get("folds", c.tree_folds);
    tf.Finish();
  }
  f.Get("skew_groups", c.skew_groups);
  if (const json* r = f.Find("region")) {
    Fields rf(*r, "config.region");
    rf.Get("imputation_max", c.region_imputation_max);
    rf.Get("signal_min", c.region_signal_min);
    rf.Finish();
  }
  if (const json* d = f.Find("defenses")) {
    Fields df(*d, "config.defenses");
    df.Get("remove_retrain", c.remove_retrain);
    df.Get("retrain_cell", c.retrain_cell);
    df.Finish();
  }
  f.Get("trials", c.trials);
  f.Get("seed", c.seed);
  std::string out;
  f.Get("output_dir", out);
  if (!out.empty()) c.output_dir = Resolve(base_dir, out);
  f.Get("workers", c.workers);
  f.Finish();
  return c;
}

json ExperimentConfig::ToJson() const {
  json j;
  json d = json::object();
  if (data.csv) d["csv"] = *data.csv;
  if (data.schema) d["schema"] = *data.schema;
  if (data.synthetic) d["synthetic"] = data.synthetic->ToJson();
  if (data.seed) d["seed"] = *data.seed;
  j["data"] = d;
  j["target_value"] = target_value;
  j["train_size"] = train_size;
  j["test_size"] = test_size;
  j["model"] = TrainJson(model.train, model.hidden_dims);
  if (dp) {
    json dj = {{"clip_norm", dp->clip_norm}, {"delta", dp->delta}};
    if (dp->noise_multiplier) dj["noise_multiplier"] = *dp->noise_multiplier;
    if (dp->target_epsilon) dj["target_epsilon"] = *dp->target_epsilon;
    j["dp"] = dj;
  }
  json ij = TrainJson(imputer.train, imputer.hidden_dims);
  ij["use_label_feature"] = imputer.use_label_feature;
  j["imputer"] = ij;
  json grid_json = json::array();
  for (const ThreatCell& cell : grid) {
    grid_json.push_back({{"distribution", ToString(cell.tag)},
                         {"aux_size", cell.aux_size},
                         {"access", ToString(cell.access)}});
  }
  j["grid"] = grid_json;
  j["candidates"] = candidates;
  if (test_candidates) j["test_candidates"] = *test_candidates;
  j["attacks"] = attacks;
  j["k"] = ks;
  j["top_neurons"] = top_neurons;
  j["tree"] = {{"max_depth", tree.max_depth},
               {"min_leaf", tree.min_leaf},
               {"folds", tree_folds}};
  j["skew_groups"] = skew_groups;
  j["region"] = {{"imputation_max", region_imputation_max},
                 {"signal_min", region_signal_min}};
  json def = {{"remove_retrain", remove_retrain}};
  if (retrain_cell) def["retrain_cell"] = *retrain_cell;
  j["defenses"] = def;
  j["trials"] = trials;
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  j["workers"] = workers;
  return j;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return ExperimentConfig::FromJson(j, fs::path(path).parent_path());
}

std::string ToString(const ConfigIssue& issue) {
  return std::string(issue.scope == ConfigIssue::Scope::kConfig ? "config"
                                                                : "cell") +
         " " + issue.where + ": " + issue.message;
}

std::vector<ConfigIssue> ValidateConfig(const ExperimentConfig& c) {
  std::vector<ConfigIssue> issues;
  auto config = [&](std::string where, std::string msg) {
    issues.push_back({ConfigIssue::Scope::kConfig, std::move(where),
                      std::move(msg)});
  };
  auto cell_issue = [&](std::string where, std::string msg) {
    issues.push_back({ConfigIssue::Scope::kCell, std::move(where),
                      std::move(msg)});
  };

  std::shared_ptr<const AttributeSchema> schema;
  std::optional<std::size_t> num_records;
  std::optional<std::size_t> num_groups;
  const bool has_csv = c.data.csv || c.data.schema;
  if (c.data.synthetic && has_csv) {
    config("data", "give either a synthetic spec or csv+schema, not both");
  } else if (!c.data.synthetic && !has_csv) {
    config("data", "missing data source");
  } else if (has_csv && (!c.data.csv || !c.data.schema)) {
    config("data", "csv input needs both 'csv' and 'schema'");
  } else {
    try {
      if (c.data.synthetic) {
        c.data.synthetic->Validate();
        num_records = c.data.synthetic->num_records;
        num_groups = c.data.synthetic->ResolvedGroups().size();
      }
      schema = ConfigSchema(c);
    } catch (const std::exception& e) {
      config("data", e.what());
    }
  }

  if (c.target_value.empty()) {
    config("target_value", "missing target value t*");
  } else if (schema && schema->SensitiveIndex(c.target_value) < 0) {
    config("target_value", "'" + c.target_value +
                               "' is not a value of sensitive attribute '" +
                               schema->sensitive.name + "'");
  }
  if (c.train_size == 0) config("train_size", "must be >= 1");
  if (num_records && c.train_size + c.test_size > *num_records) {
    config("train_size", "train + test exceeds the " +
                             std::to_string(*num_records) + " records");
  }
  try {
    MlpSpec{.input_dim = 1, .hidden_dims = c.model.hidden_dims,
            .num_classes = 2}
        .Validate();
  } catch (const std::exception& e) {
    config("model.hidden_dims", e.what());
  }
  if (c.model.train.epochs < 0 || c.model.train.batch_size < 1 ||
      !(c.model.train.learning_rate > 0.0)) {
    config("model", "need epochs >= 0, batch_size >= 1, learning_rate > 0");
  }
  if (c.imputer.train.epochs < 0 || c.imputer.train.batch_size < 1 ||
      !(c.imputer.train.learning_rate > 0.0)) {
    config("imputer", "need epochs >= 0, batch_size >= 1, learning_rate > 0");
  }
  if (c.dp) {
    try {
      c.dp->Validate();
      if (c.train_size > 0) ResolveDpSchedule(*c.dp, c.model.train, c.train_size);
    } catch (const std::exception& e) {
      config("dp", e.what());
    }
  }
  if (c.candidates == 0) config("candidates", "must be >= 1");
  if (c.train_size > 0 && c.candidates > c.train_size) {
    config("candidates", "exceeds train_size");
  }
  if (ResolvedTestCandidates(c) > c.test_size) {
    config("test_candidates", "exceeds test_size");
  }
  if (c.ks.empty()) config("k", "list is empty");
  for (std::size_t k : c.ks) {
    if (k == 0) config("k", "values must be >= 1");
    if (k > c.candidates) {
      config("k", "k=" + std::to_string(k) + " exceeds the candidate count " +
                      std::to_string(c.candidates));
    }
    const std::size_t tc = ResolvedTestCandidates(c);
    if (tc > 0 && k > tc) {
      config("k", "k=" + std::to_string(k) +
                      " exceeds the test candidate count " + std::to_string(tc));
    }
  }
  if (!std::is_sorted(c.ks.begin(), c.ks.end()) ||
      std::adjacent_find(c.ks.begin(), c.ks.end()) != c.ks.end()) {
    config("k", "values must be strictly ascending");
  }
  if (c.trials < 1) config("trials", "must be >= 1");
  if (c.workers < 1) config("workers", "must be >= 1");
  if (c.top_neurons < 1) config("top_neurons", "must be >= 1");
  if (c.tree.max_depth < 0 || c.tree.min_leaf < 1) {
    config("tree", "need max_depth >= 0 and min_leaf >= 1");
  }
  if (c.tree_folds < 0) config("tree", "folds must be >= 0");
  if (c.output_dir.empty()) config("output_dir", "missing");

  std::vector<AttackKind> attacks;
  if (c.attacks.empty()) config("attacks", "list is empty");
  for (const std::string& name : c.attacks) {
    const auto kind = ParseAttack(name);
    if (!kind) {
      config("attacks", "unknown attack '" + name + "'");
    } else if (std::find(attacks.begin(), attacks.end(), *kind) !=
               attacks.end()) {
      config("attacks", "duplicate attack '" + name + "'");
    } else {
      attacks.push_back(*kind);
    }
  }

  if (c.grid.empty()) config("grid", "no threat cells");
  std::set<std::string> keys;
  for (const ThreatCell& cell : c.grid) {
    const std::string key = cell.Key();
    if (!keys.insert(key).second) config("grid", "duplicate cell " + key);
    if (cell.tag == DistributionTag::kCustom) {
      cell_issue(key, "custom distributions cannot be sampled from a grid");
    }
    if (cell.aux_size == 0) cell_issue(key, "aux_size must be >= 1");
    if (num_groups && cell.tag != DistributionTag::kFull &&
        (c.skew_groups == 0 || c.skew_groups > *num_groups)) {
      cell_issue(key, "skew_groups must lie in [1, " +
                          std::to_string(*num_groups) + "]");
    }
    for (AttackKind kind : attacks) {
      const ModelAccess need = RequiredAccess(kind);
      if (static_cast<int>(need) > static_cast<int>(cell.access)) {
        cell_issue(key, AttackName(kind) + " requires " + ToString(need) +
                            " access, cell grants " + ToString(cell.access));
      }
      if (NeedsImputer(kind) && cell.aux_size < 2) {
        cell_issue(key, AttackName(kind) +
                            " requires an imputer, which needs aux_size >= 2");
      }
      if (kind == AttackKind::kWB && cell.aux_size < 2) {
        cell_issue(key, "WB needs aux_size >= 2 to correlate neurons");
      }
    }
  }

  if (c.remove_retrain) {
    const auto idx = RetrainCellIndex(c);
    if (!idx) {
      config("defenses.remove_retrain", "needs a white-box cell");
    } else if (*idx >= c.grid.size()) {
      config("defenses.retrain_cell", "index out of range");
    } else if (c.grid[*idx].access != ModelAccess::kWhiteBox) {
      config("defenses.retrain_cell", "cell must grant white-box access");
    }
    if (!HasWhiteBoxAttack(attacks)) {
      config("defenses.remove_retrain",
             "needs a white-box attack to locate vulnerable records");
    }
  }
  return issues;
}

Dataset LoadExperimentData(const ExperimentConfig& c) {
  if (c.data.synthetic) {
    return SynthGenerate(*c.data.synthetic, c.data.seed.value_or(c.seed)).data;
  }
  if (!c.data.csv || !c.data.schema) throw ConfigError("data: no source");
  auto schema = std::make_shared<AttributeSchema>(LoadSchema(*c.data.schema));
  return LoadDataset(*c.data.csv, schema);
}

SuiteOptions MakeSuiteOptions(const ExperimentConfig& c) {
  SuiteOptions s;
  s.attacks = ParsedAttacks(c);
  s.ks = c.ks;
  s.top_neurons = c.top_neurons;
  s.tree = c.tree;
  s.tree_folds = c.tree_folds;
  s.imputer = c.imputer;
  s.skew_groups = c.skew_groups;
  s.region_imputation_max = c.region_imputation_max;
  s.region_signal_min = c.region_signal_min;
  return s;
}

std::uint64_t TrialSeed(std::uint64_t base, int trial) {
  return DeriveSeed(base, static_cast<std::uint64_t>(trial), "trial");
}

TrialResult RunTrial(const ExperimentConfig& config, const Dataset& data,
                     int trial) {
  TrialResult r;
  r.trial = trial;
  const std::uint64_t ts = TrialSeed(config.seed, trial);
  const int target = data.schema->SensitiveIndex(config.target_value);
  if (target < 0) throw ConfigError("unknown target value " + config.target_value);
  const SuiteOptions suite = MakeSuiteOptions(config);

  auto fail_all = [&](const std::string& phase, const std::string& message) {
    for (const ThreatCell& cell : config.grid) {
      r.failures.push_back({trial, phase, cell.Key(), message});
    }
  };

  const Split split = SampleSplit(data, DeriveSeed(ts, 0, "split"),
                                  config.train_size, config.test_size);
  TargetTrainingOptions options = config.model;
  options.train.seed = DeriveSeed(ts, 1, "model");
  options.dp.reset();
  std::shared_ptr<const TargetModel> model;
  try {
    model = std::make_shared<TargetModel>(TrainTargetModel(split.train, options));
  } catch (const std::exception& e) {
    fail_all("base", std::string("target model: ") + e.what());
    return r;
  }
  r.train_accuracy = TargetAccuracy(*model, split.train);
  if (!split.test.empty()) r.test_accuracy = TargetAccuracy(*model, split.test);

  const CandidateSet candidates = SampleCandidates(
      split.train, config.candidates, DeriveSeed(ts, 2, "candidates"));
  std::optional<CandidateSet> test_candidates;
  if (const std::size_t n = ResolvedTestCandidates(config); n > 0) {
    test_candidates =
        SampleCandidates(split.test, n, DeriveSeed(ts, 3, "test-candidates"));
  }
  std::set<std::size_t> exclude;
  for (const Record& rec : split.train.records) exclude.insert(rec.id);
  for (const Record& rec : split.test.records) exclude.insert(rec.id);

  CellContext ctx;
  ctx.pool = &data;
  ctx.exclude = &exclude;
  ctx.model = model;
  ctx.candidates = &candidates;
  ctx.test_candidates = test_candidates ? &*test_candidates : nullptr;
  ctx.target = target;

  std::vector<std::uint64_t> cell_seeds;
  std::vector<std::optional<std::size_t>> base_index(config.grid.size());
  for (std::size_t i = 0; i < config.grid.size(); ++i) {
    const ThreatCell& cell = config.grid[i];
    cell_seeds.push_back(DeriveSeed(ts, 100 + i, cell.Key()));
    try {
      r.outcomes.push_back({"base", EvaluateCell(ctx, cell, suite, cell_seeds[i])});
      base_index[i] = r.outcomes.size() - 1;
    } catch (const std::exception& e) {
      r.failures.push_back({trial, "base", cell.Key(), e.what()});
    }
  }

  auto add_deltas = [&](const std::string& phase, const CellOutcome& before,
                        const CellOutcome& after) {
    for (std::size_t j = 0; j < config.ks.size(); ++j) {
      r.deltas.push_back({phase, after.cell.Key(), config.ks[j],
                          DefenseDelta(Snapshot(before, j), Snapshot(after, j))});
    }
  };

  if (config.dp) {
    try {
      DpDefenseReport dp = DpDefenseEval(split.train, split.test, options,
                                         *config.dp, ctx, config.grid,
                                         cell_seeds, suite);
      r.dp_schedule = dp.schedule;
      r.dp_train_accuracy = dp.train_accuracy;
      r.dp_test_accuracy = dp.test_accuracy;
      for (const auto& [cell, message] : dp.failures) {
        r.failures.push_back({trial, "dp", cell, message});
      }
      for (CellOutcome& after : dp.cells) {
        for (std::size_t i = 0; i < config.grid.size(); ++i) {
          if (config.grid[i].Key() == after.cell.Key() && base_index[i]) {
            add_deltas("dp", r.outcomes[*base_index[i]].outcome, after);
          }
        }
        r.outcomes.push_back({"dp", std::move(after)});
      }
    } catch (const std::exception& e) {
      fail_all("dp", std::string("dp model: ") + e.what());
    }
  }

  if (config.remove_retrain) {
    const auto idx = RetrainCellIndex(config);
    const std::string key = idx && *idx < config.grid.size()
                                ? config.grid[*idx].Key()
                                : std::string("-");
    try {
      if (!idx || *idx >= config.grid.size()) {
        throw ConfigError("no white-box cell to locate vulnerable records");
      }
      if (!base_index[*idx]) {
        throw AttackError("base evaluation of the cell failed");
      }
      const CellOutcome& before = r.outcomes[*base_index[*idx]].outcome;
      if (!before.region) {
        throw AttackError("cell computed no vulnerable region");
      }
      const std::set<std::size_t> vulnerable(before.region->ids.begin(),
                                             before.region->ids.end());
      RetrainResult retrained = RemoveAndRetrain(split.train, vulnerable, options);
      CellContext after_ctx = ctx;
      after_ctx.model = std::make_shared<TargetModel>(std::move(retrained.model));
      CellOutcome after =
          EvaluateCell(after_ctx, config.grid[*idx], suite, cell_seeds[*idx]);
      const CellOutcome& before_again = r.outcomes[*base_index[*idx]].outcome;
      add_deltas("retrain", before_again, after);
      r.retrain = RetrainSummary{key, retrained.removed,
                                 DefenseDelta(Snapshot(before_again, 0),
                                              Snapshot(after, 0))};
      r.outcomes.push_back({"retrain", std::move(after)});
    } catch (const std::exception& e) {
      r.failures.push_back({trial, "retrain", key, e.what()});
    }
  }
  return r;
}

namespace {

class MetricWriter {
 public:
  explicit MetricWriter(std::ostream& out) : out_(out) {
    out_ << "phase\tcell\tattack\tmetric\tk\tvalue\n";
  }
  void Put(const std::string& phase, const std::string& cell,
           const std::string& attack, const std::string& metric,
           std::optional<std::size_t> k, double value) {
    out_ << phase << '\t' << cell << '\t' << attack << '\t' << metric << '\t'
         << (k ? std::to_string(*k) : std::string("-")) << '\t'
         << FormatDouble(value) << '\n';
  }

 private:
  std::ostream& out_;
};

}  // namespace

void WriteTrialMetrics(std::ostream& out, const TrialResult& r,
                       const std::vector<std::size_t>& ks) {
  MetricWriter w(out);
  w.Put("base", "model", "-", "train_accuracy", std::nullopt, r.train_accuracy);
  w.Put("base", "model", "-", "test_accuracy", std::nullopt, r.test_accuracy);
  if (r.dp_schedule) {
    w.Put("dp", "model", "-", "train_accuracy", std::nullopt,
          r.dp_train_accuracy);
    w.Put("dp", "model", "-", "test_accuracy", std::nullopt, r.dp_test_accuracy);
    w.Put("dp", "model", "-", "epsilon", std::nullopt, r.dp_schedule->epsilon);
    w.Put("dp", "model", "-", "noise_multiplier", std::nullopt,
          r.dp_schedule->noise_multiplier);
  }
  for (const PhaseOutcome& po : r.outcomes) {
    const CellOutcome& o = po.outcome;
    const std::string cell = o.cell.Key();
    w.Put(po.phase, cell, "-", "aux_size", std::nullopt,
          static_cast<double>(o.aux_size));
    w.Put(po.phase, cell, "-", "degenerate_imputer", std::nullopt,
          o.degenerate_imputer ? 1.0 : 0.0);
    for (const AttackResult& a : o.attacks) {
      const std::string name = AttackName(a.kind);
      for (std::size_t j = 0; j < ks.size(); ++j) {
        w.Put(po.phase, cell, name, "ppv", ks[j], a.ppv[j]);
      }
      for (std::size_t j = 0; j < a.ppv_test.size(); ++j) {
        w.Put(po.phase, cell, name, "ppv_test", ks[j], a.ppv_test[j]);
      }
      if (a.accuracy_train) {
        w.Put(po.phase, cell, name, "accuracy_train", std::nullopt,
              *a.accuracy_train);
      }
      if (a.accuracy_test) {
        w.Put(po.phase, cell, name, "accuracy_test", std::nullopt,
              *a.accuracy_test);
      }
      w.Put(po.phase, cell, name, "flagged", std::nullopt,
            static_cast<double>(a.flagged));
    }
    if (o.region) {
      w.Put(po.phase, cell, "region", "total", std::nullopt,
            static_cast<double>(o.region->total));
      w.Put(po.phase, cell, "region", "true_sensitive", std::nullopt,
            static_cast<double>(o.region->true_sensitive));
      if (o.region->ppv) {
        w.Put(po.phase, cell, "region", "ppv", std::nullopt, *o.region->ppv);
      }
    }
  }
  for (const DefenseDeltaEntry& d : r.deltas) {
    for (const auto& [key, delta] : d.report.ppv_delta) {
      const std::string attack = key.substr(key.find('/') + 1);
      w.Put(d.phase, d.cell, attack, "ppv_delta", d.k, delta);
    }
  }
  if (r.retrain) {
    const auto& rt = *r.retrain;
    w.Put("retrain", rt.cell, "region", "removed", std::nullopt,
          static_cast<double>(rt.removed));
    w.Put("retrain", rt.cell, "region", "still_vulnerable", std::nullopt,
          static_cast<double>(rt.delta.still_vulnerable));
    w.Put("retrain", rt.cell, "region", "newly_vulnerable", std::nullopt,
          static_cast<double>(rt.delta.newly_vulnerable));
    w.Put("retrain", rt.cell, "region", "no_longer_vulnerable", std::nullopt,
          static_cast<double>(rt.delta.no_longer_vulnerable));
  }
}

int ResolveWorkers(const ExperimentConfig& config) {
  if (const char* env = std::getenv(kWorkersEnv); env && *env) {
    try {
      std::size_t used = 0;
      const int n = std::stoi(env, &used);
      if (used == std::string(env).size() && n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string(kWorkersEnv) + " must be a positive integer");
  }
  return std::max(1, config.workers);
}

namespace {

void WriteFile(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

void WriteTrialFiles(const fs::path& dir, const TrialResult& r,
                     const std::vector<std::size_t>& ks) {
  std::ostringstream metrics;
  WriteTrialMetrics(metrics, r, ks);
  WriteFile(dir / "metrics.tsv", metrics.str());
  for (const PhaseOutcome& po : r.outcomes) {
    const CellOutcome& o = po.outcome;
    const fs::path cell_dir = dir / po.phase / o.cell.Key();
    std::vector<AttackScoring> scorings;
    for (const AttackResult& a : o.attacks) scorings.push_back(a.scoring);
    std::ostringstream scores;
    WriteScoreTable(scores, scorings);
    WriteFile(cell_dir / "scores.tsv", scores.str());
    if (o.whitebox) {
      std::ostringstream neurons;
      WriteNeuronReport(neurons, NeuronReport(*o.whitebox));
      WriteFile(cell_dir / "neurons.tsv", neurons.str());
    }
    if (o.region) {
      std::ostringstream region;
      WriteRegionMembers(region, *o.region, o.region_ids, o.region_imputation,
                         o.region_signal, o.region_labels);
      WriteFile(cell_dir / "region.tsv", region.str());
    }
  }
}

}  // namespace

RunSummary RunExperiment(const ExperimentConfig& config) {
  for (const ConfigIssue& issue : ValidateConfig(config)) {
    if (issue.scope == ConfigIssue::Scope::kConfig) {
      throw ConfigError(ToString(issue));
    }
  }
  const Dataset data = LoadExperimentData(config);
  const fs::path out_dir(config.output_dir);
  fs::remove_all(out_dir / "trials");
  fs::remove_all(out_dir / "tables");
  fs::create_directories(out_dir);
  {
    // Where and how fast a run happens must not change its outputs.
    json echo = config.ToJson();
    echo.erase("output_dir");
    echo.erase("workers");
    std::ostringstream cfg;
    cfg << echo.dump(2) << '\n';
    WriteFile(out_dir / "config.json", cfg.str());
  }

  const int workers = std::min(ResolveWorkers(config), config.trials);
  std::vector<std::vector<CellFailure>> failures(
      static_cast<std::size_t>(config.trials));
  std::vector<std::size_t> attempted(static_cast<std::size_t>(config.trials));
  std::atomic<int> next{0};
  std::mutex error_mu;
  std::exception_ptr error;
  auto work = [&] {
    for (int t = next++; t < config.trials; t = next++) {
      try {
        const TrialResult r = RunTrial(config, data, t);
        WriteTrialFiles(out_dir / "trials" / std::to_string(t), r, config.ks);
        failures[static_cast<std::size_t>(t)] = r.failures;
        std::size_t n = config.grid.size();
        if (config.dp) n += config.grid.size();
        if (config.remove_retrain) n += 1;
        attempted[static_cast<std::size_t>(t)] = n;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int i = 1; i < workers; ++i) pool.emplace_back(work);
  work();
  for (std::thread& th : pool) th.join();
  if (error) std::rethrow_exception(error);

  RunSummary summary;
  std::ostringstream manifest;
  manifest << "trial\tphase\tcell\terror\n";
  for (std::size_t t = 0; t < failures.size(); ++t) {
    summary.cells += attempted[t];
    for (const CellFailure& f : failures[t]) {
      std::string msg = f.message;
      std::replace(msg.begin(), msg.end(), '\t', ' ');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      manifest << f.trial << '\t' << f.phase << '\t' << f.cell << '\t' << msg
               << '\n';
      summary.failures.push_back(f);
    }
  }
  WriteFile(out_dir / "failures.tsv", manifest.str());
  WriteReport(out_dir);
  return summary;
}

// --- Report -----------------------------------------------------------------

namespace {

struct MetricKey {
  std::string phase, cell, attack, metric, k;
  auto operator<=>(const MetricKey&) const = default;
};

struct MetricStore {
  std::map<MetricKey, std::vector<double>> values;
  std::vector<std::string> phases, cells, attacks, ks;  // first-seen order

  static void Note(std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  }
  void Add(const MetricKey& key, double value) {
    values[key].push_back(value);
    Note(phases, key.phase);
    if (key.cell != "model") Note(cells, key.cell);
    if (key.attack != "-" && key.attack != "region") Note(attacks, key.attack);
    if (key.k != "-") Note(ks, key.k);
  }
  std::optional<MeanStd> Get(const MetricKey& key) const {
    const auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    return Summarize(it->second);
  }
  bool Has(const std::string& phase, const std::string& cell,
           const std::string& metric) const {
    for (const auto& [key, v] : values) {
      if (key.phase == phase && key.cell == cell && key.metric == metric) {
        return true;
      }
    }
    return false;
  }
};

std::vector<std::string> Split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) out.push_back(field);
  return out;
}

MetricStore LoadMetrics(const fs::path& dir) {
  std::vector<int> trials;
  const fs::path root = dir / "trials";
  if (fs::exists(root)) {
    for (const auto& entry : fs::directory_iterator(root)) {
      const std::string name = entry.path().filename().string();
      if (!name.empty() &&
          std::all_of(name.begin(), name.end(), [](char ch) {
            return ch >= '0' && ch <= '9';
          })) {
        trials.push_back(std::stoi(name));
      }
    }
  }
  std::sort(trials.begin(), trials.end());
  if (trials.empty()) throw Error("report: no trials under " + root.string());
  MetricStore store;
  for (int t : trials) {
    const fs::path path = root / std::to_string(t) / "metrics.tsv";
    std::ifstream in(path);
    if (!in) throw Error("report: cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto f = Split(line);
      if (f.size() != 6) {
        throw DataError(path.string() + ":" + std::to_string(lineno) +
                        ": expected 6 fields");
      }
      store.Add({f[0], f[1], f[2], f[3], f[4]}, std::stod(f[5]));
    }
  }
  return store;
}

std::vector<std::string> Sorted(std::vector<std::string> v, bool numeric) {
  if (numeric) {
    std::sort(v.begin(), v.end(), [](const std::string& a, const std::string& b) {
      return std::stoul(a) < std::stoul(b);
    });
  }
  return v;
}

void Save(const fs::path& path, const ReportTable& table, int digits = 3) {
  std::ostringstream out;
  table.Write(out, digits);
  WriteFile(path, out.str());
}

// Rows (phase label, attack) x cells for one metric at one k.
void PhaseTable(const MetricStore& s, const fs::path& path,
                const std::vector<std::pair<std::string, std::string>>& phases,
                const std::string& metric, const std::string& k) {
  std::vector<std::string> cells;
  for (const auto& c : s.cells) {
    for (const auto& [label, phase] : phases) {
      if (s.Has(phase, c, metric)) {
        MetricStore::Note(cells, c);
        break;
      }
    }
  }
  ReportTable table({"phase", "attack"}, cells);
  for (const auto& [label, phase] : phases) {
    for (const auto& a : s.attacks) {
      bool any = false;
      for (const auto& c : cells) any = any || s.Get({phase, c, a, metric, k});
      if (!any) continue;
      for (const auto& c : cells) {
        table.Set({label, a}, c, s.Get({phase, c, a, metric, k}));
      }
    }
  }
  Save(path, table);
}

}  // namespace

void WriteReport(const fs::path& dir) {
  const MetricStore s = LoadMetrics(dir);
  const fs::path tables = dir / "tables";
  fs::create_directories(tables);
  const auto ks = Sorted(s.ks, true);

  std::vector<std::pair<std::string, std::string>> all_phases;
  for (const auto& p : s.phases) all_phases.emplace_back(p, p);

  for (const auto& k : ks) {
    PhaseTable(s, tables / ("ppv_at_" + k + ".tsv"), all_phases, "ppv", k);
  }

  // Plot-ready series.
  std::vector<PpvCurve> curves;
  for (const auto& phase : s.phases) {
    for (const auto& c : s.cells) {
      for (const auto& a : s.attacks) {
        PpvCurve curve{a, phase + "/" + c, {}, {}, {}};
        for (const auto& k : ks) {
          if (const auto v = s.Get({phase, c, a, "ppv", k})) {
            curve.ks.push_back(std::stoul(k));
            curve.mean.push_back(v->mean);
            curve.std.push_back(v->std);
          }
        }
        if (!curve.ks.empty()) curves.push_back(std::move(curve));
      }
    }
  }
  {
    std::ostringstream out;
    WritePpvSeries(out, curves);
    WriteFile(tables / "ppv_series.tsv", out.str());
  }

  // Attribute prediction accuracy on training and test candidates.
  {
    std::vector<std::string> cols;
    for (const auto& c : s.cells) {
      cols.push_back(c + "/train");
      cols.push_back(c + "/test");
    }
    ReportTable table({"phase", "attack"}, cols);
    for (const auto& phase : s.phases) {
      for (const auto& a : s.attacks) {
        bool any = false;
        for (const auto& c : s.cells) {
          for (const char* m : {"accuracy_train", "accuracy_test"}) {
            any = any || s.Get({phase, c, a, m, "-"});
          }
        }
        if (!any) continue;
        for (const auto& c : s.cells) {
          table.Set({phase, a}, c + "/train",
                    s.Get({phase, c, a, "accuracy_train", "-"}));
          table.Set({phase, a}, c + "/test",
                    s.Get({phase, c, a, "accuracy_test", "-"}));
        }
      }
    }
    Save(tables / "accuracy.tsv", table);
  }

  // Training candidates vs test candidates.
  for (const auto& k : ks) {
    std::vector<std::string> cols;
    for (const auto& c : s.cells) {
      for (const char* suffix : {"/train", "/test", "/gap"}) cols.push_back(c + suffix);
    }
    ReportTable table({"phase", "attack"}, cols);
    bool any_row = false;
    for (const auto& phase : s.phases) {
      for (const auto& a : s.attacks) {
        bool any = false;
        for (const auto& c : s.cells) any = any || s.Get({phase, c, a, "ppv_test", k});
        if (!any) continue;
        any_row = true;
        for (const auto& c : s.cells) {
          const auto tr = s.values.find({phase, c, a, "ppv", k});
          const auto te = s.values.find({phase, c, a, "ppv_test", k});
          table.Set({phase, a}, c + "/train", s.Get({phase, c, a, "ppv", k}));
          table.Set({phase, a}, c + "/test", s.Get({phase, c, a, "ppv_test", k}));
          if (tr != s.values.end() && te != s.values.end() &&
              tr->second.size() == te->second.size()) {
            std::vector<double> gap;
            for (std::size_t i = 0; i < tr->second.size(); ++i) {
              gap.push_back(tr->second[i] - te->second[i]);
            }
            table.Set({phase, a}, c + "/gap", Summarize(gap));
          }
        }
      }
    }
    if (any_row) Save(tables / ("train_vs_test_at_" + k + ".tsv"), table);
  }

  // Vulnerable region.
  {
    ReportTable table({"phase", "cell"}, {"total", "true_sensitive", "ppv"});
    bool any = false;
    for (const auto& phase : s.phases) {
      for (const auto& c : s.cells) {
        if (!s.Has(phase, c, "total")) continue;
        any = true;
        for (const char* m : {"total", "true_sensitive", "ppv"}) {
          table.Set({phase, c}, m, s.Get({phase, c, "region", m, "-"}));
        }
      }
    }
    if (any) Save(tables / "vulnerable_region.tsv", table);
  }

  // Defenses: before/after tables and deltas.
  const bool has_dp = std::count(s.phases.begin(), s.phases.end(), "dp") > 0;
  const bool has_retrain =
      std::count(s.phases.begin(), s.phases.end(), "retrain") > 0;
  for (const auto& k : ks) {
    if (has_dp) {
      PhaseTable(s, tables / ("defense_dp_at_" + k + ".tsv"),
                 {{"before", "base"}, {"after", "dp"}}, "ppv", k);
    }
    if (has_retrain) {
      // Only the retrained cell appears after; restrict columns to it.
      MetricStore restricted;
      for (const auto& [key, v] : s.values) {
        if (s.Has("retrain", key.cell, "ppv")) {
          for (double x : v) restricted.Add(key, x);
        }
      }
      restricted.attacks = s.attacks;
      PhaseTable(restricted, tables / ("defense_retrain_at_" + k + ".tsv"),
                 {{"before", "base"}, {"after", "retrain"}}, "ppv", k);
    }
  }
  if (has_dp || has_retrain) {
    ReportTable table({"defense", "cell", "attack", "metric", "k"}, {"value"});
    for (const auto& phase : {"dp", "retrain"}) {
      for (const auto& [key, v] : s.values) {
        if (key.phase != phase || key.cell == "model") continue;
        if (key.metric != "ppv_delta" && key.attack != "region") continue;
        if (key.attack == "region" && key.metric != "removed" &&
            key.metric != "still_vulnerable" &&
            key.metric != "newly_vulnerable" &&
            key.metric != "no_longer_vulnerable") {
          continue;
        }
        table.Set({key.phase, key.cell, key.attack, key.metric, key.k}, "value",
                  Summarize(v));
      }
    }
    Save(tables / "defense_delta.tsv", table);
  }

  // Model-level quantities.
  {
    ReportTable table({"phase", "metric"}, {"value"});
    for (const auto& phase : s.phases) {
      for (const char* m :
           {"train_accuracy", "test_accuracy", "epsilon", "noise_multiplier"}) {
        if (const auto v = s.Get({phase, "model", "-", m, "-"})) {
          table.Set({phase, m}, "value", v);
        }
      }
    }
    Save(tables / "model.tsv", table, 4);
  }

  // Attack flags: prior fallbacks, mixed CSMIA matches, short selections.
  {
    ReportTable table({"phase", "cell", "attack"}, {"flagged"});
    for (const auto& [key, v] : s.values) {
      if (key.metric != "flagged") continue;
      if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) {
        continue;
      }
      table.Set({key.phase, key.cell, key.attack}, "flagged", Summarize(v));
    }
    Save(tables / "flags.tsv", table);
  }
}

}  // namespace attrinf
