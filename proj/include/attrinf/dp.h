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

// DP-SGD (per-example clipping + Gaussian noise) with a Gaussian-DP
// accountant based on the central-limit approximation
//
//   mu = p * sqrt(T * (exp(1 / sigma^2) - 1))
//
// and the mu-GDP to (epsilon, delta) conversion
//
//   delta(eps) = Phi(-eps / mu + mu / 2) - exp(eps) * Phi(-eps / mu - mu / 2).

#ifndef ATTRINF_DP_H_
#define ATTRINF_DP_H_

#include <functional>
#include <optional>
#include <span>

#include "attrinf/mlp.h"

namespace attrinf {

double NormalCdf(double x);

// mu of the composed mechanism. Requires p in (0, 1], steps >= 1, sigma > 0.
double GdpMu(double sampling_rate, long steps, double noise_multiplier);

// delta achieved at `epsilon` by a mu-GDP mechanism.
double GdpDelta(double mu, double epsilon);

// Smallest epsilon with GdpDelta(mu, epsilon) <= delta, by bisection.
double GdpEpsilon(double mu, double delta);

// Noise multiplier whose accountant epsilon equals `epsilon` at `delta`.
// Throws ConfigError when the target is unreachable inside the search range.
double CalibrateNoiseMultiplier(double epsilon, double delta,
                                double sampling_rate, long steps);

struct DpConfig {
  double clip_norm = 1.0;
  std::optional<double> noise_multiplier;  // sigma
  std::optional<double> target_epsilon;    // calibrates sigma when set
  double delta = 1e-5;

  void Validate() const;
};

struct DpSchedule {
  double sampling_rate = 0.0;
  long steps = 0;
  double noise_multiplier = 0.0;
  double epsilon = 0.0;  // +inf when sigma == 0
};

// Resolves sigma and the accountant's epsilon for `cfg` on n examples.
DpSchedule ResolveDpSchedule(const DpConfig& dp, const TrainConfig& cfg,
                             std::size_t n);

// Called with the norm of every per-example gradient after clipping.
using ClipObserver = std::function<void(double clipped_norm)>;

// Same batch sequence as Train(). Each step clips every example's gradient
// to clip_norm, sums, adds N(0, (sigma * clip_norm)^2) noise per coordinate
// and divides by the batch size.
Mlp TrainDp(Mlp init, const Matrix& x, std::span<const int> labels,
            const TrainConfig& cfg, const DpConfig& dp,
            const ClipObserver& observer = {});

}  // namespace attrinf

#endif  // ATTRINF_DP_H_
