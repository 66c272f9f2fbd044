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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wlc/rng.hpp"
#include "wlc/tensor.hpp"

namespace wlc {

/// Node of a classification tree stored in a flat array. Internal nodes send
/// rows with x[feature] <= threshold to `left`; leaves (feature == -1) hold
/// the class histogram of the training rows that reached them.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<std::uint32_t> histogram;

  bool is_leaf() const { return feature < 0; }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct TreeParams {
  /// 0 means unlimited.
  std::size_t max_depth = 0;
  std::size_t min_leaf = 1;
  /// Features examined per split; 0 means all.
  std::size_t feature_subsample = 0;
};

/// CART classification tree: Gini impurity, exhaustive search over midpoints
/// between consecutive distinct feature values.
class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::vector<TreeNode> nodes, int feature_count, int class_count)
      : nodes_(std::move(nodes)), feature_count_(feature_count), class_count_(class_count) {}

  /// Leaf reached by `row`.
  const TreeNode& leaf_for(std::span<const double> row) const;
  /// Majority class of the leaf, ties toward the lowest index.
  int predict_row(std::span<const double> row) const;
  std::vector<int> predict(const Matrix& x) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int feature_count() const { return feature_count_; }
  int class_count() const { return class_count_; }
  std::size_t depth() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
  int feature_count_ = 0;
  int class_count_ = 0;
};

/// Trains on the rows of `x` listed in `rows` (duplicates allowed, as in a
/// bootstrap sample). `rng` drives feature subsampling. EmptyInput when no
/// rows are given.
DecisionTree train_tree(const Matrix& x, std::span<const int> y, int class_count, std::span<const std::size_t> rows,
                        const TreeParams& params, Rng& rng);
/// Trains on every row of `x`.
DecisionTree train_tree(const Matrix& x, std::span<const int> y, int class_count, const TreeParams& params, Rng& rng);

/// Lowest index holding the largest count.
template <typename T>
int argmax_lowest(std::span<const T> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace wlc
