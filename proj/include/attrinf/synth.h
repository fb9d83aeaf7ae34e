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

// Synthetic tabular data with a planted, exactly known relation between the
// non-sensitive features and the sensitive attribute.
//
// Generative model, per record:
//   group g       ~ Categorical(group weights)
//   x_j           ~ N(0, 1)                     continuous features
//   c_k           ~ Uniform(levels)             categorical features
//   logit         = a_g + correlation * <w, x[0:num_signal]>
//                   + categorical_signal * e(c_0)
//   t == target   ~ Bernoulli(sigmoid(logit)); other values uniform
//   y             = argmax_c label_scale * <B_c, x[0:num_label_features]>
//                   + label_sensitive_weight * G_c * [t == target]
//                   + label_noise * Gumbel
// where w has unit norm, e spreads levels evenly over [-1/2, 1/2], and a_g is
// solved numerically so the expected target rate of group g equals its
// configured base rate.

#ifndef ATTRINF_SYNTH_H_
#define ATTRINF_SYNTH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "attrinf/tabular.h"
#include "json.hpp"

namespace attrinf {

struct SynthGroup {
  std::string name;
  double weight = 1.0;
  double base_rate = 0.28;
};

struct SynthSpec {
  std::size_t num_records = 20000;

  // Explicit groups take precedence over the generated Zipf layout.
  std::vector<SynthGroup> groups;
  int num_groups = 20;
  double zipf_exponent = 1.0;
  double base_rate_small = 0.28;  // smallest group
  double base_rate_large = 0.28;  // largest group

  int num_continuous = 6;
  int num_signal = 3;
  int num_categorical = 2;
  int levels = 4;
  double correlation = 1.0;
  double categorical_signal = 0.0;

  std::vector<std::string> sensitive_values = {"neg", "pos"};
  int target = 1;

  int num_classes = 2;
  int num_label_features = 3;
  double label_scale = 1.0;
  double label_sensitive_weight = 0.0;
  double label_noise = 1.0;

  // Throws ConfigError on an invalid spec.
  void Validate() const;
  std::vector<SynthGroup> ResolvedGroups() const;

  static SynthSpec FromJson(const nlohmann::json& j);
  nlohmann::json ToJson() const;
};

struct SynthData {
  Dataset data;
  std::vector<double> true_prob;     // Pr[t == target | x, group] per record
  std::vector<double> intercepts;    // a_g, aligned with ResolvedGroups()
  std::vector<SynthGroup> groups;
};

AttributeSchema SynthSchema(const SynthSpec& spec);

SynthData SynthGenerate(const SynthSpec& spec, std::uint64_t seed);

// Intercept a with E[sigmoid(a + eta)] == rate, eta being the logit shift
// induced by the features under `spec`.
double CalibrateIntercept(const SynthSpec& spec, double rate);

}  // namespace attrinf

#endif  // ATTRINF_SYNTH_H_
