// Copyright 2026 The wlclass Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wlc/tree.hpp"

namespace wlc {

struct ForestParams {
  std::size_t n_trees = 100;
  std::uint64_t seed = 0;
  std::size_t max_depth = 0;
  std::size_t min_leaf = 1;
  /// Features examined per split; 0 means floor(sqrt(d)), at least 1.
  std::size_t max_features = 0;
  unsigned threads = 0;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  std::size_t n_trees = 0;
  std::uint64_t seed = 0;
  int feature_count = 0;
  int class_count = 0;

  friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

/// Bagged CART trees. Tree t sees a bootstrap sample of size N drawn from a
/// generator derived from (seed, t), so the model does not depend on the
/// thread count.
ForestModel train_forest(const Matrix& x, std::span<const int> y, int class_count, const ForestParams& params);

/// Per-row vote counts, rows x class_count.
std::vector<std::vector<int>> forest_votes(const ForestModel& model, const Matrix& x);
/// Majority vote of the trees, ties toward the lowest class index.
std::vector<int> predict(const ForestModel& model, const Matrix& x);

}  // namespace wlc
