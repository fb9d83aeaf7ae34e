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

#include "attrinf/attack_core.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace attrinf {
namespace {

std::vector<std::size_t> RankedPositions(const AttackScoring& s) {
  std::vector<std::size_t> pos(s.size());
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  std::sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) {
    const double sa = s.scores[static_cast<Eigen::Index>(a)];
    const double sb = s.scores[static_cast<Eigen::Index>(b)];
    if (sa != sb) return sa > sb;
    return s.ids[a] < s.ids[b];
  });
  return pos;
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double ParseDouble(const std::string& tok) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw DataError("tree: bad number '" + tok + "'");
  }
  return v;
}

struct Builder {
  std::span<const TreePoint> points;
  TreeParams params;
  std::vector<TreeNode> nodes;

  int Build(std::vector<std::size_t> idx, int depth) {
    const double n = static_cast<double>(idx.size());
    double pos = 0.0;
    for (std::size_t i : idx) pos += points[i].label;
    const int id = static_cast<int>(nodes.size());
    TreeNode leaf;
    leaf.value = idx.empty() ? 0.0 : pos / n;
    leaf.count = idx.size();
    nodes.push_back(leaf);
    if (depth >= params.max_depth || pos == 0.0 || pos == n ||
        idx.size() < 2 * static_cast<std::size_t>(params.min_leaf)) {
      return id;
    }
    const double parent = n * Gini(pos, n);
    double best = parent;
    int best_feature = -1;
    double best_threshold = 0.0;
    for (int f = 0; f < 2; ++f) {
      std::vector<std::size_t> sorted = idx;
      std::stable_sort(sorted.begin(), sorted.end(),
                       [&](std::size_t a, std::size_t b) {
                         return points[a].x[f] < points[b].x[f];
                       });
      double left_pos = 0.0;
      for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
        left_pos += points[sorted[k]].label;
        const double lo = points[sorted[k]].x[f];
        const double hi = points[sorted[k + 1]].x[f];
        if (lo == hi) continue;
        const double nl = static_cast<double>(k + 1);
        const double nr = n - nl;
        if (nl < params.min_leaf || nr < params.min_leaf) continue;
        const double impurity =
            nl * Gini(left_pos, nl) + nr * Gini(pos - left_pos, nr);
        if (impurity < best - 1e-12) {
          best = impurity;
          best_feature = f;
          best_threshold = 0.5 * (lo + hi);
        }
      }
    }
    if (best_feature < 0) return id;
    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
      (points[i].x[best_feature] < best_threshold ? left : right).push_back(i);
    }
    const int l = Build(std::move(left), depth + 1);
    const int r = Build(std::move(right), depth + 1);
    TreeNode& node = nodes[static_cast<std::size_t>(id)];
    node.leaf = false;
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }
};

void WriteNode(std::ostream& out, const std::vector<TreeNode>& nodes, int id,
               int indent) {
  const TreeNode& n = nodes[static_cast<std::size_t>(id)];
  out << std::string(static_cast<std::size_t>(indent) * 2, ' ');
  if (n.leaf) {
    out << "leaf " << FormatDouble(n.value) << ' ' << n.count << '\n';
    return;
  }
  out << "split " << n.feature << ' ' << FormatDouble(n.threshold) << ' '
      << FormatDouble(n.value) << ' ' << n.count << '\n';
  WriteNode(out, nodes, n.left, indent + 1);
  WriteNode(out, nodes, n.right, indent + 1);
}

int ReadNode(std::istream& in, std::vector<TreeNode>& nodes) {
  std::string kind;
  if (!(in >> kind)) throw DataError("tree: truncated input");
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  TreeNode n;
  std::string tok;
  if (kind == "leaf") {
    in >> tok;
    n.value = ParseDouble(tok);
    if (!(in >> n.count)) throw DataError("tree: bad leaf count");
  } else if (kind == "split") {
    n.leaf = false;
    if (!(in >> n.feature) || n.feature < 0 || n.feature > 1) {
      throw DataError("tree: bad split feature");
    }
    in >> tok;
    n.threshold = ParseDouble(tok);
    in >> tok;
    n.value = ParseDouble(tok);
    if (!(in >> n.count)) throw DataError("tree: bad node count");
    n.left = ReadNode(in, nodes);
    n.right = ReadNode(in, nodes);
  } else {
    throw DataError("tree: unknown node kind '" + kind + "'");
  }
  nodes[static_cast<std::size_t>(id)] = n;
  return id;
}

int Depth(const std::vector<TreeNode>& nodes, int id) {
  const TreeNode& n = nodes[static_cast<std::size_t>(id)];
  if (n.leaf) return 0;
  return 1 + std::max(Depth(nodes, n.left), Depth(nodes, n.right));
}

}  // namespace

void AttackScoring::Validate() const {
  if (static_cast<Eigen::Index>(ids.size()) != scores.size()) {
    throw AttackError(attack + ": " + std::to_string(scores.size()) +
                      " scores for " + std::to_string(ids.size()) +
                      " candidates");
  }
  if (!scores.allFinite()) throw AttackError(attack + ": non-finite score");
}

std::vector<int> Decide(const AttackScoring& scoring, double threshold) {
  std::vector<int> out(scoring.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = scoring.scores[static_cast<Eigen::Index>(i)] >= threshold ? 1 : 0;
  }
  return out;
}

std::vector<std::size_t> TopKPositions(const AttackScoring& scoring,
                                       std::size_t k) {
  if (k < 1 || k > scoring.size()) {
    throw AttackError("top-k: k=" + std::to_string(k) + " outside [1, " +
                      std::to_string(scoring.size()) + "]");
  }
  std::vector<std::size_t> pos(scoring.size());
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  std::partial_sort(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(k),
                    pos.end(), [&](std::size_t a, std::size_t b) {
                      const double sa =
                          scoring.scores[static_cast<Eigen::Index>(a)];
                      const double sb =
                          scoring.scores[static_cast<Eigen::Index>(b)];
                      if (sa != sb) return sa > sb;
                      return scoring.ids[a] < scoring.ids[b];
                    });
  pos.resize(k);
  return pos;
}

std::vector<std::size_t> TopK(const AttackScoring& scoring, std::size_t k) {
  std::vector<std::size_t> out;
  for (std::size_t p : TopKPositions(scoring, k)) {
    out.push_back(scoring.ids[p]);
  }
  return out;
}

ThresholdChoice BestPpvThreshold(const AttackScoring& scoring,
                                 std::span<const int> labels) {
  if (labels.size() != scoring.size()) {
    throw AttackError("threshold: label count does not match candidates");
  }
  if (std::none_of(labels.begin(), labels.end(), [](int l) { return l; })) {
    throw AttackError("threshold: need at least one positive label");
  }
  const std::vector<std::size_t> ranked = RankedPositions(scoring);
  ThresholdChoice best;
  best.ppv = -1.0;
  double positives = 0.0;
  std::size_t i = 0;
  while (i < ranked.size()) {
    const double s = scoring.scores[static_cast<Eigen::Index>(ranked[i])];
    while (i < ranked.size() &&
           scoring.scores[static_cast<Eigen::Index>(ranked[i])] == s) {
      positives += labels[ranked[i]];
      ++i;
    }
    const double threshold =
        i < ranked.size()
            ? 0.5 * (s + scoring.scores[static_cast<Eigen::Index>(ranked[i])])
            : -std::numeric_limits<double>::infinity();
    const double ppv = positives / static_cast<double>(i);
    if (ppv > best.ppv) {
      best = {threshold, ppv, i};
    }
  }
  return best;
}

double Gini(double positives, double total) {
  if (total <= 0.0) return 0.0;
  const double p = positives / total;
  return 2.0 * p * (1.0 - p);
}

DecisionTree::DecisionTree(std::vector<TreeNode> nodes)
    : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw DataError("tree: no nodes");
}

double DecisionTree::Predict(const std::array<double, 2>& x) const {
  if (nodes_.empty()) throw AttackError("tree: not fitted");
  const TreeNode* n = &nodes_[0];
  while (!n->leaf) {
    n = &nodes_[static_cast<std::size_t>(
        x[static_cast<std::size_t>(n->feature)] < n->threshold ? n->left
                                                               : n->right)];
  }
  return n->value;
}

int DecisionTree::depth() const {
  return nodes_.empty() ? 0 : Depth(nodes_, 0);
}

void DecisionTree::Write(std::ostream& out) const {
  if (nodes_.empty()) throw AttackError("tree: not fitted");
  WriteNode(out, nodes_, 0, 0);
}

DecisionTree DecisionTree::Read(std::istream& in) {
  std::vector<TreeNode> nodes;
  ReadNode(in, nodes);
  return DecisionTree(std::move(nodes));
}

std::string DecisionTree::ToString() const {
  std::ostringstream out;
  Write(out);
  return out.str();
}

DecisionTree DecisionTree::FromString(const std::string& s) {
  std::istringstream in(s);
  return Read(in);
}

bool DecisionTree::operator==(const DecisionTree& other) const {
  if (nodes_.size() != other.nodes_.size()) return false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& a = nodes_[i];
    const TreeNode& b = other.nodes_[i];
    if (a.leaf != b.leaf || a.value != b.value || a.count != b.count) {
      return false;
    }
    if (!a.leaf && (a.feature != b.feature || a.threshold != b.threshold ||
                    a.left != b.left || a.right != b.right)) {
      return false;
    }
  }
  return true;
}

DecisionTree FitTree(std::span<const TreePoint> points,
                     const TreeParams& params) {
  if (points.empty()) throw AttackError("tree: no training points");
  if (params.max_depth < 0 || params.min_leaf < 1) {
    throw ConfigError("tree: need max_depth >= 0 and min_leaf >= 1");
  }
  for (const TreePoint& p : points) {
    if (!std::isfinite(p.x[0]) || !std::isfinite(p.x[1])) {
      throw AttackError("tree: non-finite feature");
    }
  }
  Builder b{points, params, {}};
  std::vector<std::size_t> idx(points.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  b.Build(std::move(idx), 0);
  return DecisionTree(std::move(b.nodes));
}

double TreeConfidence(const DecisionTree& tree, double imputation_prob,
                      double signal) {
  return tree.Predict({imputation_prob, signal});
}

double TrainingGini(const DecisionTree& tree,
                    std::span<const TreePoint> points) {
  if (points.empty()) return 0.0;
  const auto& nodes = tree.nodes();
  std::vector<double> pos(nodes.size(), 0.0), cnt(nodes.size(), 0.0);
  for (const TreePoint& p : points) {
    int id = 0;
    while (!nodes[static_cast<std::size_t>(id)].leaf) {
      const TreeNode& n = nodes[static_cast<std::size_t>(id)];
      id = p.x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left
                                                                  : n.right;
    }
    pos[static_cast<std::size_t>(id)] += p.label;
    cnt[static_cast<std::size_t>(id)] += 1.0;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    total += cnt[i] * Gini(pos[i], cnt[i]);
  }
  return total / static_cast<double>(points.size());
}

}  // namespace attrinf
