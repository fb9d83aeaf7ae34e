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

#include "attrinf/dp.h"

#include <cmath>
#include <limits>
#include <string>

namespace attrinf {
namespace {

constexpr double kSigmaLo = 1e-2;
constexpr double kSigmaHi = 1e4;

}  // namespace

double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double GdpMu(double sampling_rate, long steps, double noise_multiplier) {
  if (!(sampling_rate > 0.0 && sampling_rate <= 1.0) || steps < 1 ||
      !(noise_multiplier > 0.0)) {
    throw ConfigError("gdp: need p in (0,1], T >= 1, sigma > 0");
  }
  const double inv = 1.0 / (noise_multiplier * noise_multiplier);
  return sampling_rate * std::sqrt(double(steps) * std::expm1(inv));
}

double GdpDelta(double mu, double epsilon) {
  if (mu <= 0.0) return 0.0;
  const double a = NormalCdf(-epsilon / mu + mu / 2);
  // exp(eps) * Phi(b) computed in log space to avoid overflow.
  const double b = NormalCdf(-epsilon / mu - mu / 2);
  const double tail = b > 0.0 ? std::exp(epsilon + std::log(b)) : 0.0;
  return a - tail;
}

double GdpEpsilon(double mu, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ConfigError("gdp: delta must lie in (0, 1)");
  }
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw ConfigError("gdp: mu must be positive and finite");
  }
  if (GdpDelta(mu, 0.0) <= delta) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (GdpDelta(mu, hi) > delta) {
    hi *= 2.0;
    if (hi > 1e6) throw ConfigError("gdp: no epsilon root in search bracket");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (GdpDelta(mu, mid) > delta ? lo : hi) = mid;
  }
  return hi;
}

double CalibrateNoiseMultiplier(double epsilon, double delta,
                                double sampling_rate, long steps) {
  if (!(epsilon > 0.0)) throw ConfigError("dp: target epsilon must be > 0");
  auto eps_at = [&](double sigma) {
    return GdpEpsilon(GdpMu(sampling_rate, steps, sigma), delta);
  };
  double lo = kSigmaLo;
  double hi = kSigmaHi;
  // A tiny sigma can overflow mu; that never meets the target.
  auto meets_target = [&](double sigma) {
    const double mu = GdpMu(sampling_rate, steps, sigma);
    return std::isfinite(mu) && eps_at(sigma) <= epsilon;
  };
  if (!meets_target(hi)) {
    throw ConfigError("dp: target epsilon " + std::to_string(epsilon) +
                      " unreachable in " + std::to_string(steps) + " steps");
  }
  if (meets_target(lo)) return lo;
  // Epsilon decreases in sigma: find the smallest sigma meeting the target.
  for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (meets_target(mid) ? hi : lo) = mid;
  }
  return hi;
}

void DpConfig::Validate() const {
  if (!(clip_norm > 0.0)) throw ConfigError("dp: clip_norm must be > 0");
  if (noise_multiplier.has_value() == target_epsilon.has_value()) {
    throw ConfigError(
        "dp: set exactly one of noise_multiplier and target_epsilon");
  }
  if (noise_multiplier && !(*noise_multiplier >= 0.0)) {
    throw ConfigError("dp: noise_multiplier must be >= 0");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ConfigError("dp: delta must lie in (0, 1)");
  }
}

DpSchedule ResolveDpSchedule(const DpConfig& dp, const TrainConfig& cfg,
                             std::size_t n) {
  dp.Validate();
  if (n == 0) throw ConfigError("dp: empty training set");
  DpSchedule s;
  const auto b = static_cast<std::size_t>(cfg.batch_size);
  s.sampling_rate = std::min(1.0, double(b) / double(n));
  s.steps = static_cast<long>(cfg.ResolvedEpochs(n)) *
            static_cast<long>((n + b - 1) / b);
  if (s.steps < 1) {
    // Zero epochs: nothing is released beyond the initialization.
    s.noise_multiplier = dp.noise_multiplier.value_or(0.0);
    s.epsilon = 0.0;
    return s;
  }
  if (dp.target_epsilon) {
    s.noise_multiplier = CalibrateNoiseMultiplier(*dp.target_epsilon, dp.delta,
                                                  s.sampling_rate, s.steps);
  } else {
    s.noise_multiplier = *dp.noise_multiplier;
  }
  s.epsilon = s.noise_multiplier > 0.0
                  ? GdpEpsilon(GdpMu(s.sampling_rate, s.steps,
                                     s.noise_multiplier),
                               dp.delta)
                  : std::numeric_limits<double>::infinity();
  return s;
}

Mlp TrainDp(Mlp model, const Matrix& x, std::span<const int> labels,
            const TrainConfig& cfg, const DpConfig& dp,
            const ClipObserver& observer) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw DataError("train_dp: label count does not match data");
  }
  if (cfg.batch_size <= 0 || !(cfg.learning_rate > 0)) {
    throw ConfigError("train_dp: batch_size and learning_rate must be positive");
  }
  const std::size_t n = labels.size();
  const DpSchedule schedule = ResolveDpSchedule(dp, cfg, n);
  const int epochs = cfg.ResolvedEpochs(n);
  Rng batch_rng(DeriveSeed(cfg.seed, 0, "batches"));
  Rng noise_rng(DeriveSeed(cfg.seed, 1, "dp-noise"));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double noise_std = schedule.noise_multiplier * dp.clip_norm;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  Gradients sum = Gradients::ZerosLike(model);
  double loss = 0.0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const std::vector<std::size_t> order = EpochOrder(n, batch_rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      std::vector<Eigen::Index> rows(order.begin() + start,
                                     order.begin() + end);
      const Matrix xb = x(rows, Eigen::all);
      std::vector<int> yb;
      yb.reserve(rows.size());
      for (Eigen::Index r : rows) yb.push_back(labels[static_cast<std::size_t>(r)]);
      const BatchTrace trace = model.ForwardBatch(xb);
      std::vector<Matrix> deltas = BatchDeltas(model, trace, yb);
      // Each example's layer gradient is an outer product, so its squared
      // norm is (|a|^2 + 1) * |delta|^2 with the bias included.
      Vector sq = Vector::Zero(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t l = 0; l < deltas.size(); ++l) {
        sq += ((trace.post[l].rowwise().squaredNorm().array() + 1.0) *
               deltas[l].rowwise().squaredNorm().array())
                  .matrix();
      }
      loss = 0.0;
      Vector factor(sq.size());
      for (Eigen::Index i = 0; i < sq.size(); ++i) {
        loss -= std::log(std::max(trace.probs(i, yb[static_cast<std::size_t>(i)]),
                                  1e-300));
        const double norm = std::sqrt(sq[i]);
        factor[i] = norm > dp.clip_norm ? dp.clip_norm / norm : 1.0;
        if (observer) observer(norm * factor[i]);
      }
      for (std::size_t l = 0; l < deltas.size(); ++l) {
        deltas[l] = factor.asDiagonal() * deltas[l];
        sum.layers[l].weight.noalias() = trace.post[l].transpose() * deltas[l];
        sum.layers[l].bias = deltas[l].colwise().sum().transpose();
      }
      loss /= double(rows.size());
      if (!std::isfinite(loss)) {
        throw TrainingError("train_dp: non-finite loss at epoch " +
                            std::to_string(epoch));
      }
      const double inv_b = 1.0 / double(rows.size());
      for (std::size_t l = 0; l < sum.layers.size(); ++l) {
        Layer& g = sum.layers[l];
        if (noise_std > 0.0) {
          for (Eigen::Index k = 0; k < g.weight.size(); ++k) {
            g.weight.data()[k] += noise_std * normal(noise_rng);
          }
          for (Eigen::Index k = 0; k < g.bias.size(); ++k) {
            g.bias[k] += noise_std * normal(noise_rng);
          }
        }
        Layer& p = model.mutable_layers()[l];
        p.weight -= (cfg.learning_rate * inv_b) * g.weight;
        p.bias -= (cfg.learning_rate * inv_b) * g.bias;
      }
    }
    if (!model.AllFinite()) {
      throw TrainingError("train_dp: non-finite parameters after epoch " +
                          std::to_string(epoch));
    }
  }
  TrainingInfo& info = model.mutable_info();
  info.epochs = epochs;
  info.seed = cfg.seed;
  info.dp = true;
  info.noise_multiplier = schedule.noise_multiplier;
  info.clip_norm = dp.clip_norm;
  info.epsilon = schedule.epsilon;
  info.delta = dp.delta;
  info.final_loss = loss;
  return model;
}

}  // namespace attrinf
