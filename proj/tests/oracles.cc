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

#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace attrinf::oracle {

std::vector<std::vector<double>> Forward(const Mlp& m,
                                         const std::vector<double>& x) {
  std::vector<std::vector<double>> acts = {x};
  const auto& layers = m.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Matrix& w = layers[l].weight;
    std::vector<double> out(static_cast<std::size_t>(w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      double s = layers[l].bias[j];
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        s += acts.back()[static_cast<std::size_t>(i)] * w(i, j);
      }
      out[static_cast<std::size_t>(j)] =
          l + 1 < layers.size() ? std::max(0.0, s) : s;
    }
    acts.push_back(out);
  }
  std::vector<double>& logits = acts.back();
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double& v : logits) z += (v = std::exp(v - mx));
  for (double& v : logits) v /= z;
  return acts;
}

double Loss(const Mlp& m, const Matrix& x, const std::vector<int>& y) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vector r = x.row(i).transpose();
    const std::vector<double> row(r.data(), r.data() + r.size());
    loss -= std::log(
        Forward(m, row).back()[static_cast<std::size_t>(y[static_cast<std::size_t>(i)])]);
  }
  return loss / static_cast<double>(x.rows());
}

Gradients FiniteDifferences(const Mlp& m, const Matrix& x,
                            const std::vector<int>& y, double eps) {
  Gradients g = Gradients::ZerosLike(m);
  Mlp probe = m;
  auto fd = [&](double& param, double& out) {
    const double saved = param;
    param = saved + eps;
    const double up = Loss(probe, x, y);
    param = saved - eps;
    const double down = Loss(probe, x, y);
    param = saved;
    out = (up - down) / (2 * eps);
  };
  for (std::size_t l = 0; l < m.layers().size(); ++l) {
    Layer& p = probe.mutable_layers()[l];
    for (Eigen::Index i = 0; i < p.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.weight.cols(); ++j) {
        fd(p.weight(i, j), g.layers[l].weight(i, j));
      }
    }
    for (Eigen::Index j = 0; j < p.bias.size(); ++j) {
      fd(p.bias[j], g.layers[l].bias[j]);
    }
  }
  return g;
}

double RelativeError(const Gradients& a, const Gradients& b) {
  Gradients diff = a;
  diff.AddScaled(b, -1.0);
  const double scale =
      std::max({std::sqrt(a.SquaredNorm()), std::sqrt(b.SquaredNorm()), 1e-12});
  return std::sqrt(diff.SquaredNorm()) / scale;
}

double Pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double c = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    c += (x[i] - mx) * (y[i] - my);
    vx += (x[i] - mx) * (x[i] - mx);
    vy += (y[i] - my) * (y[i] - my);
  }
  return c / std::sqrt(vx) / std::sqrt(vy);
}

double BestPpv(const std::vector<double>& scores, const std::vector<int>& labels) {
  double best = -1.0;
  for (double cut : scores) {
    double hits = 0.0, count = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= cut) {
        count += 1.0;
        hits += labels[i];
      }
    }
    best = std::max(best, hits / count);
  }
  return best;
}

double BestStumpGini(const std::vector<TreePoint>& pts, int min_leaf) {
  double pos = 0.0;
  for (const TreePoint& p : pts) pos += p.label;
  const double n = static_cast<double>(pts.size());
  double best = Gini(pos, n);
  for (std::size_t f = 0; f < 2; ++f) {
    for (const TreePoint& cut : pts) {
      double nl = 0.0, pl = 0.0;
      for (const TreePoint& p : pts) {
        if (p.x[f] < cut.x[f]) {
          nl += 1.0;
          pl += p.label;
        }
      }
      if (nl < min_leaf || n - nl < min_leaf) continue;
      best = std::min(
          best, (nl * Gini(pl, nl) + (n - nl) * Gini(pos - pl, n - nl)) / n);
    }
  }
  return best;
}

double Walk(const std::vector<TreeNode>& nodes, double a, double b) {
  std::size_t i = 0;
  while (!nodes[i].leaf) {
    const double x = nodes[i].feature == 0 ? a : b;
    i = static_cast<std::size_t>(x >= nodes[i].threshold ? nodes[i].right
                                                         : nodes[i].left);
  }
  return nodes[i].value;
}

}  // namespace attrinf::oracle
