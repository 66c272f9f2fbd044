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


#include "wlc/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stack>

#include "wlc/error.hpp"

namespace wlc {
namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = -1.0;  // sum_c L_c^2 / n_L + sum_c R_c^2 / n_R, larger is purer
};

// Best Gini split of `rows` on one feature; score < 0 when no valid split.
Split best_split_on(const Matrix& x, std::span<const int> y, int class_count, std::span<const std::size_t> rows, int feature,
                    std::size_t min_leaf, std::vector<std::pair<double, int>>& scratch) {
  scratch.clear();
  for (auto r : rows) scratch.emplace_back(x(static_cast<Eigen::Index>(r), feature), y[r]);
  std::sort(scratch.begin(), scratch.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  Split best;
  best.feature = feature;
  if (scratch.front().first == scratch.back().first) return best;

  std::vector<double> left(static_cast<std::size_t>(class_count), 0.0);
  std::vector<double> right(static_cast<std::size_t>(class_count), 0.0);
  for (const auto& [v, c] : scratch) right[static_cast<std::size_t>(c)] += 1.0;
  double left_sq = 0.0;
  double right_sq = 0.0;
  for (double c : right) right_sq += c * c;

  const std::size_t n = scratch.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto c = static_cast<std::size_t>(scratch[i].second);
    left_sq += 2.0 * left[c] + 1.0;
    left[c] += 1.0;
    right_sq -= 2.0 * right[c] - 1.0;
    right[c] -= 1.0;
    if (scratch[i].first == scratch[i + 1].first) continue;
    const std::size_t n_left = i + 1;
    const std::size_t n_right = n - n_left;
    if (n_left < min_leaf || n_right < min_leaf) continue;
    const double score = left_sq / static_cast<double>(n_left) + right_sq / static_cast<double>(n_right);
    if (score > best.score) {
      best.score = score;
      double mid = 0.5 * (scratch[i].first + scratch[i + 1].first);
      // rounding can land the midpoint on the upper value
      if (mid >= scratch[i + 1].first || !std::isfinite(mid)) mid = scratch[i].first;
      best.threshold = mid;
    }
  }
  return best;
}

}  // namespace

const TreeNode& DecisionTree::leaf_for(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes_[i];
}

int DecisionTree::predict_row(std::span<const double> row) const {
  return argmax_lowest<std::uint32_t>(leaf_for(row).histogram);
}

std::vector<int> DecisionTree::predict(const Matrix& x) const {
  if (x.rows() > 0 && x.cols() != feature_count_) {
    throw Error(ErrorCode::ShapeMismatch, "tree expects " + std::to_string(feature_count_) + " features, got " +
                                              std::to_string(x.cols()));
  }
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    out[static_cast<std::size_t>(r)] = predict_row({x.row(r).data(), static_cast<std::size_t>(x.cols())});
  }
  return out;
}

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::size_t deepest = 0;
  std::stack<std::pair<int, std::size_t>> todo;
  todo.emplace(0, 0);
  while (!todo.empty()) {
    auto [i, d] = todo.top();
    todo.pop();
    deepest = std::max(deepest, d);
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.is_leaf()) {
      todo.emplace(n.left, d + 1);
      todo.emplace(n.right, d + 1);
    }
  }
  return deepest;
}

DecisionTree train_tree(const Matrix& x, std::span<const int> y, int class_count, std::span<const std::size_t> rows,
                        const TreeParams& params, Rng& rng) {
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, "cannot train a tree on zero rows");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error(ErrorCode::ShapeMismatch, "X rows and y length differ");
  const int d = static_cast<int>(x.cols());
  const std::size_t min_leaf = std::max<std::size_t>(1, params.min_leaf);
  const std::size_t mtry = params.feature_subsample == 0 ? static_cast<std::size_t>(d)
                                                         : std::min<std::size_t>(params.feature_subsample, static_cast<std::size_t>(d));

  struct Pending {
    int node;
    std::vector<std::size_t> rows;
    std::size_t depth;
  };
  std::vector<TreeNode> nodes(1);
  std::stack<Pending> todo;
  todo.push({0, std::vector<std::size_t>(rows.begin(), rows.end()), 0});
  std::vector<int> features(static_cast<std::size_t>(d));
  std::vector<std::pair<double, int>> scratch;

  while (!todo.empty()) {
    Pending p = std::move(todo.top());
    todo.pop();
    std::vector<std::uint32_t> hist(static_cast<std::size_t>(class_count), 0);
    for (auto r : p.rows) {
      const int c = y[r];
      if (c < 0 || c >= class_count) throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(c));
      ++hist[static_cast<std::size_t>(c)];
    }
    const bool pure = std::count_if(hist.begin(), hist.end(), [](auto c) { return c > 0; }) <= 1;
    const bool depth_capped = params.max_depth != 0 && p.depth >= params.max_depth;
    Split best;
    if (!pure && !depth_capped && p.rows.size() >= 2 * min_leaf) {
      std::iota(features.begin(), features.end(), 0);
      if (mtry < static_cast<std::size_t>(d)) rng.shuffle(std::span<int>(features));
      std::size_t examined = 0;
      for (int f : features) {
        if (examined == mtry) break;
        const Split s = best_split_on(x, y, class_count, p.rows, f, min_leaf, scratch);
        // constant features do not count toward the subsample
        if (scratch.front().first != scratch.back().first) ++examined;
        if (s.score > best.score) best = s;
      }
    }
    auto& node = nodes[static_cast<std::size_t>(p.node)];
    if (best.score < 0.0) {
      node.histogram = std::move(hist);
      continue;
    }
    std::vector<std::size_t> left_rows, right_rows;
    for (auto r : p.rows) {
      (x(static_cast<Eigen::Index>(r), best.feature) <= best.threshold ? left_rows : right_rows).push_back(r);
    }
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = static_cast<int>(nodes.size());
    node.right = static_cast<int>(nodes.size() + 1);
    const int left_id = node.left;
    const int right_id = node.right;
    nodes.emplace_back();
    nodes.emplace_back();
    todo.push({right_id, std::move(right_rows), p.depth + 1});
    todo.push({left_id, std::move(left_rows), p.depth + 1});
  }
  return DecisionTree(std::move(nodes), d, class_count);
}

DecisionTree train_tree(const Matrix& x, std::span<const int> y, int class_count, const TreeParams& params, Rng& rng) {
  std::vector<std::size_t> rows(static_cast<std::size_t>(x.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  return train_tree(x, y, class_count, rows, params, rng);
}

}  // namespace wlc
