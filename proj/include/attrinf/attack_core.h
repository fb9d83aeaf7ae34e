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

// Machinery shared by every score-based attack: thresholded decisions,
// deterministic top-k ranking, PPV-maximizing threshold search, and the
// two-feature decision tree that combines imputation with a model signal.

#ifndef ATTRINF_ATTACK_CORE_H_
#define ATTRINF_ATTACK_CORE_H_

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "attrinf/common.h"

namespace attrinf {

struct AttackScoring {
  std::string attack;
  int target = 0;
  std::vector<std::size_t> ids;
  Vector scores;

  std::size_t size() const { return ids.size(); }
  // Throws if sizes disagree or a score is not finite.
  void Validate() const;
};

// 1 iff score >= threshold.
std::vector<int> Decide(const AttackScoring& scoring, double threshold);

// Positions (into ids/scores) of the k highest scores, best first. Ties go
// to the smaller candidate id.
std::vector<std::size_t> TopKPositions(const AttackScoring& scoring,
                                       std::size_t k);
std::vector<std::size_t> TopK(const AttackScoring& scoring, std::size_t k);

struct ThresholdChoice {
  double threshold = 0.0;
  double ppv = 0.0;
  std::size_t predicted = 0;
};

// Scans -inf and the midpoints between consecutive distinct scores, keeping
// the threshold with the best PPV among those predicting at least one
// positive; ties prefer the larger threshold. `labels` are 0/1.
ThresholdChoice BestPpvThreshold(const AttackScoring& scoring,
                                 std::span<const int> labels);

// --- Decision tree combiner --------------------------------------------------

struct TreeParams {
  int max_depth = 5;
  int min_leaf = 5;
};

struct TreePoint {
  std::array<double, 2> x;  // {imputation probability, model signal}
  int label = 0;
};

struct TreeNode {
  bool leaf = true;
  int feature = 0;
  double threshold = 0.0;
  int left = -1;   // feature < threshold
  int right = -1;  // feature >= threshold
  double value = 0.0;  // positive fraction of the training points here
  std::size_t count = 0;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes);

  double Predict(const std::array<double, 2>& x) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int depth() const;

  // Indented text, one node per line:
  //   split <feature> <threshold>   followed by the left and right subtrees
  //   leaf <value> <count>
  void Write(std::ostream& out) const;
  static DecisionTree Read(std::istream& in);
  std::string ToString() const;
  static DecisionTree FromString(const std::string& s);

  bool operator==(const DecisionTree&) const;

 private:
  std::vector<TreeNode> nodes_;  // nodes_[0] is the root
};

// Greedy CART on Gini impurity. Candidate splits are midpoints between
// consecutive distinct values; a split must leave min_leaf points per side
// and strictly lower the impurity. Ties prefer the lower feature index, then
// the lower threshold.
DecisionTree FitTree(std::span<const TreePoint> points,
                     const TreeParams& params);

double TreeConfidence(const DecisionTree& tree, double imputation_prob,
                      double signal);

// Count-weighted Gini impurity of the leaves reached by `points`.
double TrainingGini(const DecisionTree& tree, std::span<const TreePoint> points);

double Gini(double positives, double total);

}  // namespace attrinf

#endif  // ATTRINF_ATTACK_CORE_H_
