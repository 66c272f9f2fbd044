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
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "wlc/tensor.hpp"

namespace wlc {

/// Node of a boosting regression tree. Every node keeps the gradient and
/// hessian sums of the rows that reached it; splits record their gain before
/// the gamma penalty, leaves their unscaled weight.
struct RegressionNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double weight = 0.0;
  double gain = 0.0;
  double sum_grad = 0.0;
  double sum_hess = 0.0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const RegressionNode&, const RegressionNode&) = default;
};

struct RegressionTree {
  std::vector<RegressionNode> nodes;

  double predict_row(std::span<const double> row) const;
  std::size_t leaf_count() const;
  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

struct GbtParams {
  std::size_t rounds = 40;
  double learning_rate = 0.3;
  std::size_t max_depth = 6;
  /// Minimum loss reduction for a split; +inf disables splitting.
  double gamma = 0.0;
  /// l1 penalty on leaf weights.
  double alpha = 0.0;
  /// l2 penalty on leaf weights.
  double lambda = 1.0;
  /// Minimum hessian sum on each side of a split.
  double min_child_weight = 1.0;
  unsigned threads = 0;
};

struct FeatureImportance {
  std::vector<std::size_t> split_count;
  std::vector<double> total_gain;
  friend bool operator==(const FeatureImportance&, const FeatureImportance&) = default;
};

struct GbtModel {
  /// rounds x class_count trees.
  std::vector<std::vector<RegressionTree>> rounds;
  double learning_rate = 0.3;
  double gamma = 0.0;
  double alpha = 0.0;
  double lambda = 1.0;
  double min_child_weight = 1.0;
  std::size_t max_depth = 6;
  /// Initial margin shared by every class.
  double base_score = 0.0;
  int class_count = 0;
  int feature_count = 0;
  FeatureImportance importance;
  /// Mean multiclass log-loss on the training rows after each round.
  std::vector<double> train_loss;

  /// rows x class_count margins: base_score + learning_rate * sum of leaf weights.
  Matrix margins(const Matrix& x) const;

  friend bool operator==(const GbtModel&, const GbtModel&) = default;
};

/// -sign(G) * max(|G| - alpha, 0) / (H + lambda).
double leaf_weight(double sum_grad, double sum_hess, double alpha, double lambda);
/// Objective reduction of a split before the gamma penalty:
/// 1/2 [S(G_L,H_L) + S(G_R,H_R) - S(G,H)] with S(G,H) = T_alpha(G)^2 / (H + lambda).
double split_gain(double grad_left, double hess_left, double grad_right, double hess_right, double alpha, double lambda);

/// Softmax boosting. Each round fits one regression tree per class to the
/// gradients g = p - onehot(y) and hessians h = max(2 p (1 - p), 1e-16).
GbtModel train_gbt(const Matrix& x, std::span<const int> y, int class_count, const GbtParams& params);

/// Argmax of margins, ties toward the lowest class index.
std::vector<int> predict(const GbtModel& model, const Matrix& x);

/// Mean negative log-likelihood of `y` under softmax(margins).
double multiclass_log_loss(const Matrix& margins, std::span<const int> y);

struct ImportanceEntry {
  int feature = 0;
  std::string name;
  std::size_t split_count = 0;
  double total_gain = 0.0;
};

/// Features with at least one split, by split count then total gain, both
/// descending; remaining ties by feature index.
std::vector<ImportanceEntry> feature_importance_report(const GbtModel& model, std::span<const std::string> feature_names);

}  // namespace wlc
