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

#include "attrinf/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <set>

namespace attrinf {
namespace {

double Sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                : std::exp(x) / (1.0 + std::exp(x));
}

double LevelEffect(int level, int levels) {
  if (levels <= 1) return 0.0;
  return static_cast<double>(level) / (levels - 1) - 0.5;
}

std::string GroupName(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "g%03d", i);
  return buf;
}

// E over (z ~ N(0,1), level uniform) of sigmoid(a + s*z + c*e(level)).
double ExpectedRate(const SynthSpec& spec, double a) {
  const double s = spec.num_signal > 0 ? spec.correlation : 0.0;
  const int levels =
      spec.num_categorical > 0 && spec.categorical_signal != 0.0 ? spec.levels
                                                                 : 1;
  constexpr int kSteps = 4000;
  constexpr double kLimit = 9.0;
  const double h = 2 * kLimit / kSteps;
  double total = 0.0;
  for (int l = 0; l < levels; ++l) {
    const double shift = spec.categorical_signal * LevelEffect(l, levels);
    double integral = 0.0;
    for (int i = 0; i <= kSteps; ++i) {
      const double z = -kLimit + i * h;
      const double w = (i == 0 || i == kSteps) ? 0.5 : 1.0;
      integral += w * std::exp(-0.5 * z * z) * Sigmoid(a + s * z + shift);
    }
    total += integral * h / std::sqrt(2 * M_PI);
  }
  return total / levels;
}

}  // namespace

void SynthSpec::Validate() const {
  if (num_continuous + num_categorical <= 0) {
    throw ConfigError("synth: spec has zero features");
  }
  if (num_records == 0) throw ConfigError("synth: num_records is zero");
  if (num_signal < 0 || num_signal > num_continuous) {
    throw ConfigError("synth: num_signal must lie in [0, num_continuous]");
  }
  if (num_label_features < 0 || num_label_features > num_continuous) {
    throw ConfigError(
        "synth: num_label_features must lie in [0, num_continuous]");
  }
  if (num_categorical > 0 && levels < 1) {
    throw ConfigError("synth: categorical features need at least one level");
  }
  if (sensitive_values.size() < 2) {
    throw ConfigError("synth: need at least two sensitive values");
  }
  if (target < 0 || target >= static_cast<int>(sensitive_values.size())) {
    throw ConfigError("synth: target index out of range");
  }
  if (num_classes < 2) throw ConfigError("synth: num_classes must be >= 2");
  auto check_rate = [](double r) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw ConfigError("synth: base rate outside [0, 1]");
    }
  };
  if (groups.empty()) {
    if (num_groups < 1) throw ConfigError("synth: num_groups must be >= 1");
    check_rate(base_rate_small);
    check_rate(base_rate_large);
  }
  for (const SynthGroup& g : groups) {
    check_rate(g.base_rate);
    if (!(g.weight > 0)) throw ConfigError("synth: group weight must be > 0");
  }
}

std::vector<SynthGroup> SynthSpec::ResolvedGroups() const {
  if (!groups.empty()) return groups;
  std::vector<SynthGroup> out;
  for (int i = 0; i < num_groups; ++i) {
    SynthGroup g;
    g.name = GroupName(i);
    g.weight = 1.0 / std::pow(i + 1.0, zipf_exponent);
    const double frac = num_groups > 1 ? double(i) / (num_groups - 1) : 0.0;
    g.base_rate = base_rate_large + (base_rate_small - base_rate_large) * frac;
    out.push_back(g);
  }
  return out;
}

SynthSpec SynthSpec::FromJson(const nlohmann::json& j) {
  SynthSpec s;
  static const std::set<std::string> kKeys = {
      "num_records", "groups", "num_groups", "zipf_exponent", "base_rate",
      "base_rate_small", "base_rate_large", "num_continuous", "num_signal",
      "num_categorical", "levels", "correlation", "categorical_signal",
      "sensitive_values", "target", "num_classes", "num_label_features",
      "label_scale", "label_sensitive_weight", "label_noise"};
  if (!j.is_object()) throw ConfigError("synth spec: expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.count(key)) {
      throw ConfigError("synth spec: unknown key '" + key + "'");
    }
  }
  try {
    s.num_records = j.value("num_records", s.num_records);
    if (j.contains("groups")) {
      for (const auto& g : j.at("groups")) {
        s.groups.push_back({g.at("name").get<std::string>(),
                            g.value("weight", 1.0),
                            g.at("base_rate").get<double>()});
      }
    }
    s.num_groups = j.value("num_groups", s.num_groups);
    s.zipf_exponent = j.value("zipf_exponent", s.zipf_exponent);
    if (j.contains("base_rate")) {
      s.base_rate_small = s.base_rate_large = j.at("base_rate").get<double>();
    }
    s.base_rate_small = j.value("base_rate_small", s.base_rate_small);
    s.base_rate_large = j.value("base_rate_large", s.base_rate_large);
    s.num_continuous = j.value("num_continuous", s.num_continuous);
    s.num_signal = j.value("num_signal", s.num_signal);
    s.num_categorical = j.value("num_categorical", s.num_categorical);
    s.levels = j.value("levels", s.levels);
    s.correlation = j.value("correlation", s.correlation);
    s.categorical_signal = j.value("categorical_signal", s.categorical_signal);
    s.sensitive_values = j.value("sensitive_values", s.sensitive_values);
    s.target = j.value("target", s.target);
    s.num_classes = j.value("num_classes", s.num_classes);
    s.num_label_features = j.value("num_label_features", s.num_label_features);
    s.label_scale = j.value("label_scale", s.label_scale);
    s.label_sensitive_weight =
        j.value("label_sensitive_weight", s.label_sensitive_weight);
    s.label_noise = j.value("label_noise", s.label_noise);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth spec: ") + e.what());
  }
  s.Validate();
  return s;
}

nlohmann::json SynthSpec::ToJson() const {
  nlohmann::json j = {{"num_records", num_records},
                      {"num_groups", num_groups},
                      {"zipf_exponent", zipf_exponent},
                      {"base_rate_small", base_rate_small},
                      {"base_rate_large", base_rate_large},
                      {"num_continuous", num_continuous},
                      {"num_signal", num_signal},
                      {"num_categorical", num_categorical},
                      {"levels", levels},
                      {"correlation", correlation},
                      {"categorical_signal", categorical_signal},
                      {"sensitive_values", sensitive_values},
                      {"target", target},
                      {"num_classes", num_classes},
                      {"num_label_features", num_label_features},
                      {"label_scale", label_scale},
                      {"label_sensitive_weight", label_sensitive_weight},
                      {"label_noise", label_noise}};
  if (!groups.empty()) {
    nlohmann::json gs = nlohmann::json::array();
    for (const SynthGroup& g : groups) {
      gs.push_back({{"name", g.name},
                    {"weight", g.weight},
                    {"base_rate", g.base_rate}});
    }
    j["groups"] = gs;
  }
  return j;
}

AttributeSchema SynthSchema(const SynthSpec& spec) {
  AttributeSchema s;
  for (int j = 0; j < spec.num_continuous; ++j) {
    Attribute a;
    a.name = "x" + std::to_string(j);
    s.features.push_back(a);
  }
  for (int k = 0; k < spec.num_categorical; ++k) {
    Attribute a;
    a.name = "c" + std::to_string(k);
    a.kind = AttributeKind::kCategorical;
    for (int l = 0; l < spec.levels; ++l) {
      a.levels.push_back("l" + std::to_string(l));
    }
    s.features.push_back(a);
  }
  s.sensitive.name = "sensitive";
  s.sensitive.kind = AttributeKind::kCategorical;
  s.sensitive.levels = spec.sensitive_values;
  s.label_name = "label";
  s.num_classes = spec.num_classes;
  s.group_key = "group";
  s.Validate();
  return s;
}

double CalibrateIntercept(const SynthSpec& spec, double rate) {
  if (rate <= 0.0) return -std::numeric_limits<double>::infinity();
  if (rate >= 1.0) return std::numeric_limits<double>::infinity();
  double lo = -60.0;
  double hi = 60.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ExpectedRate(spec, mid) < rate ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

SynthData SynthGenerate(const SynthSpec& spec, std::uint64_t seed) {
  spec.Validate();
  SynthData out;
  out.groups = spec.ResolvedGroups();
  for (const SynthGroup& g : out.groups) {
    out.intercepts.push_back(CalibrateIntercept(spec, g.base_rate));
  }
  out.data.schema = std::make_shared<const AttributeSchema>(SynthSchema(spec));

  // Fixed structure (signal and label directions) comes from its own stream
  // so that num_records does not perturb it.
  Rng structure(DeriveSeed(seed, 0, "synth-structure"));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> signal(static_cast<std::size_t>(spec.num_signal), 0.0);
  if (spec.num_signal > 0) {
    const double w = 1.0 / std::sqrt(double(spec.num_signal));
    std::fill(signal.begin(), signal.end(), w);
  }
  const auto num_classes = static_cast<std::size_t>(spec.num_classes);
  std::vector<std::vector<double>> label_dirs(num_classes);
  std::vector<double> label_sensitive(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (int j = 0; j < spec.num_label_features; ++j) {
      label_dirs[c].push_back(normal(structure));
    }
    label_sensitive[c] = normal(structure);
  }

  Rng rng(DeriveSeed(seed, 1, "synth-records"));
  std::vector<double> weights;
  for (const SynthGroup& g : out.groups) weights.push_back(g.weight);
  std::discrete_distribution<int> pick_group(weights.begin(), weights.end());
  std::uniform_int_distribution<int> pick_level(0, std::max(spec.levels, 1) - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int num_values = static_cast<int>(spec.sensitive_values.size());
  std::uniform_int_distribution<int> pick_other(0, num_values - 2);

  out.data.records.reserve(spec.num_records);
  out.true_prob.reserve(spec.num_records);
  for (std::size_t i = 0; i < spec.num_records; ++i) {
    Record r;
    r.id = i;
    const int g = pick_group(rng);
    r.group = out.groups[static_cast<std::size_t>(g)].name;
    r.features.resize(
        static_cast<std::size_t>(spec.num_continuous + spec.num_categorical));
    for (int j = 0; j < spec.num_continuous; ++j) r.features[j] = normal(rng);
    for (int k = 0; k < spec.num_categorical; ++k) {
      r.features[spec.num_continuous + k] = pick_level(rng);
    }
    double logit = out.intercepts[static_cast<std::size_t>(g)];
    if (std::isfinite(logit)) {
      for (int j = 0; j < spec.num_signal; ++j) {
        logit += spec.correlation * signal[j] * r.features[j];
      }
      if (spec.num_categorical > 0) {
        logit += spec.categorical_signal *
                 LevelEffect(static_cast<int>(r.features[spec.num_continuous]),
                             spec.levels);
      }
    }
    const double p = Sigmoid(logit);
    out.true_prob.push_back(p);
    if (unit(rng) < p) {
      r.sensitive = spec.target;
    } else {
      const int other = pick_other(rng);
      r.sensitive = other >= spec.target ? other + 1 : other;
    }
    const double is_target = r.sensitive == spec.target ? 1.0 : 0.0;
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < num_classes; ++c) {
      double score = spec.label_sensitive_weight * label_sensitive[c] *
                     is_target;
      for (int j = 0; j < spec.num_label_features; ++j) {
        score += spec.label_scale * label_dirs[c][j] * r.features[j];
      }
      const double u = std::max(unit(rng), 1e-300);
      score += spec.label_noise * -std::log(-std::log(u));
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(c);
      }
    }
    r.label = best;
    out.data.records.push_back(std::move(r));
  }
  return out;
}

}  // namespace attrinf
