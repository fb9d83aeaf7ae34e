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

// Slow, loop-based reference implementations that the unit tests and the
// acceptance runner compare the library against.

#ifndef ATTRINF_TESTS_ORACLES_H_
#define ATTRINF_TESTS_ORACLES_H_

#include <vector>

#include "attrinf/attack_core.h"
#include "attrinf/mlp.h"

namespace attrinf::oracle {

// Activations of every layer for one input, the last entry being the
// softmax output. Plain loops, no matrix products.
std::vector<std::vector<double>> Forward(const Mlp& m,
                                         const std::vector<double>& x);

// Mean cross-entropy through Forward.
double Loss(const Mlp& m, const Matrix& x, const std::vector<int>& y);

// Central differences of Loss for every parameter.
Gradients FiniteDifferences(const Mlp& m, const Matrix& x,
                            const std::vector<int>& y, double eps);

// ||a - b|| / max(||a||, ||b||).
double RelativeError(const Gradients& a, const Gradients& b);

// Two-pass sample correlation.
double Pearson(const std::vector<double>& x, const std::vector<double>& y);

// Best PPV over every "score >= s" cut, s ranging over the distinct scores.
double BestPpv(const std::vector<double>& scores, const std::vector<int>& labels);

// Minimum mean Gini impurity over every admissible single split.
double BestStumpGini(const std::vector<TreePoint>& points, int min_leaf);

// Leaf value reached by walking the node table, >= going right.
double Walk(const std::vector<TreeNode>& nodes, double a, double b);

}  // namespace attrinf::oracle

#endif  // ATTRINF_TESTS_ORACLES_H_
