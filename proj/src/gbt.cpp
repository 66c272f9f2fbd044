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


#include "wlc/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stack>

#include "wlc/error.hpp"
#include "wlc/parallel.hpp"
#include "wlc/tree.hpp"

namespace wlc {
namespace {

double soft_threshold(double g, double alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return 0.0;
}

double score(double g, double h, double alpha, double lambda) {
  const double t = soft_threshold(g, alpha);
  return t * t / (h + lambda);
}

struct Candidate {
  double gain = -std::numeric_limits<double>::infinity();
  double threshold = 0.0;
  int feature = -1;
};

// Exact greedy search on one feature over the rows of a node.
Candidate best_on_feature(const Matrix& x, std::span<const double> g, std::span<const double> h,
                          std::span<const std::size_t> rows, int feature, double G, double H, const GbtParams& p) {
  std::vector<std::pair<double, std::size_t>> sorted;
  sorted.reserve(rows.size());
  for (auto r : rows) sorted.emplace_back(x(static_cast<Eigen::Index>(r), feature), r);
  std::sort(sorted.begin(), sorted.end());
  Candidate best;
  best.feature = feature;
  double gl = 0.0, hl = 0.0;
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    gl += g[sorted[i].second];
    hl += h[sorted[i].second];
    if (sorted[i].first == sorted[i + 1].first) continue;
    const double gr = G - gl;
    const double hr = H - hl;
    if (hl < p.min_child_weight || hr < p.min_child_weight) continue;
    const double gain = split_gain(gl, hl, gr, hr, p.alpha, p.lambda);
    if (gain > best.gain) {
      best.gain = gain;
      double mid = 0.5 * (sorted[i].first + sorted[i + 1].first);
      if (mid >= sorted[i + 1].first || !std::isfinite(mid)) mid = sorted[i].first;
      best.threshold = mid;
    }
  }
  return best;
}

RegressionTree grow_tree(const Matrix& x, std::span<const double> g, std::span<const double> h, const GbtParams& p,
                         FeatureImportance& importance) {
  const auto n = static_cast<std::size_t>(x.rows());
  const int d = static_cast<int>(x.cols());
  RegressionTree tree;
  tree.nodes.emplace_back();
  struct Pending {
    int node;
    std::vector<std::size_t> rows;
    std::size_t depth;
  };
  std::stack<Pending> todo;
  {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    todo.push({0, std::move(all), 0});
  }
  std::vector<Candidate> per_feature(static_cast<std::size_t>(d));
  while (!todo.empty()) {
    Pending item = std::move(todo.top());
    todo.pop();
    double G = 0.0, H = 0.0;
    for (auto r : item.rows) {
      G += g[r];
      H += h[r];
    }
    {
      auto& node = tree.nodes[static_cast<std::size_t>(item.node)];
      node.sum_grad = G;
      node.sum_hess = H;
      node.weight = leaf_weight(G, H, p.alpha, p.lambda);
    }
    Candidate best;
    if (item.depth < p.max_depth && item.rows.size() >= 2 && !(p.gamma == std::numeric_limits<double>::infinity())) {
      parallel_for(static_cast<std::size_t>(d), p.threads, [&](std::size_t f) {
        per_feature[f] = best_on_feature(x, g, h, item.rows, static_cast<int>(f), G, H, p);
      });
      for (const auto& c : per_feature) {
        if (c.gain > best.gain) best = c;
      }
    }
    if (!(best.gain - p.gamma > 0.0)) continue;

    std::vector<std::size_t> left_rows, right_rows;
    for (auto r : item.rows) (x(static_cast<Eigen::Index>(r), best.feature) <= best.threshold ? left_rows : right_rows).push_back(r);
    const int left_id = static_cast<int>(tree.nodes.size());
    auto& node = tree.nodes[static_cast<std::size_t>(item.node)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.gain = best.gain;
    node.weight = 0.0;
    node.left = left_id;
    node.right = left_id + 1;
    ++importance.split_count[static_cast<std::size_t>(best.feature)];
    importance.total_gain[static_cast<std::size_t>(best.feature)] += best.gain;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    todo.push({left_id + 1, std::move(right_rows), item.depth + 1});
    todo.push({left_id, std::move(left_rows), item.depth + 1});
  }
  return tree;
}

void softmax_row(std::span<double> z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : z) v /= sum;
}

}  // namespace

double leaf_weight(double sum_grad, double sum_hess, double alpha, double lambda) {
  return -soft_threshold(sum_grad, alpha) / (sum_hess + lambda);
}

double split_gain(double gl, double hl, double gr, double hr, double alpha, double lambda) {
  return 0.5 * (score(gl, hl, alpha, lambda) + score(gr, hr, alpha, lambda) - score(gl + gr, hl + hr, alpha, lambda));
}

double RegressionTree::predict_row(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i].weight;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.is_leaf(); }));
}

Matrix GbtModel::margins(const Matrix& x) const {
  if (x.rows() > 0 && x.cols() != feature_count) {
    throw Error(ErrorCode::ShapeMismatch, "boosted model expects " + std::to_string(feature_count) + " features, got " +
                                              std::to_string(x.cols()));
  }
  Matrix out = Matrix::Constant(x.rows(), class_count, base_score);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const std::span<const double> row(x.row(r).data(), static_cast<std::size_t>(x.cols()));
    for (const auto& round : rounds) {
      for (int c = 0; c < class_count; ++c) out(r, c) += learning_rate * round[static_cast<std::size_t>(c)].predict_row(row);
    }
  }
  return out;
}

double multiclass_log_loss(const Matrix& margins, std::span<const int> y) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < margins.rows(); ++r) {
    const double mx = margins.row(r).maxCoeff();
    const double lse = mx + std::log((margins.row(r).array() - mx).exp().sum());
    total += lse - margins(r, y[static_cast<std::size_t>(r)]);
  }
  return margins.rows() > 0 ? total / static_cast<double>(margins.rows()) : 0.0;
}

GbtModel train_gbt(const Matrix& x, std::span<const int> y, int class_count, const GbtParams& params) {
  if (x.rows() == 0) throw Error(ErrorCode::EmptyInput, "cannot boost on zero rows");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error(ErrorCode::ShapeMismatch, "X rows and y length differ");
  if (params.rounds == 0) throw Error(ErrorCode::InvalidArgument, "boosting needs at least one round");
  if (class_count < 2) throw Error(ErrorCode::InvalidArgument, "boosting needs at least 2 classes");
  for (int c : y) {
    if (c < 0 || c >= class_count) throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(c));
  }
  const auto n = static_cast<std::size_t>(x.rows());
  const auto k = static_cast<std::size_t>(class_count);

  GbtModel model;
  model.learning_rate = params.learning_rate;
  model.gamma = params.gamma;
  model.alpha = params.alpha;
  model.lambda = params.lambda;
  model.min_child_weight = params.min_child_weight;
  model.max_depth = params.max_depth;
  model.class_count = class_count;
  model.feature_count = static_cast<int>(x.cols());
  model.importance.split_count.assign(static_cast<std::size_t>(x.cols()), 0);
  model.importance.total_gain.assign(static_cast<std::size_t>(x.cols()), 0.0);

  Matrix margin = Matrix::Constant(x.rows(), class_count, model.base_score);
  std::vector<double> g(n), h(n);
  std::vector<double> prob(k);
  Matrix grads(x.rows(), class_count), hess(x.rows(), class_count);
  for (std::size_t round = 0; round < params.rounds; ++round) {
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < k; ++c) prob[c] = margin(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      softmax_row(prob);
      for (std::size_t c = 0; c < k; ++c) {
        const double p = prob[c];
        grads(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = p - (y[r] == static_cast<int>(c) ? 1.0 : 0.0);
        hess(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = std::max(2.0 * p * (1.0 - p), 1e-16);
      }
    }
    std::vector<RegressionTree> trees(k);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t r = 0; r < n; ++r) {
        g[r] = grads(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        h[r] = hess(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      }
      trees[c] = grow_tree(x, g, h, params, model.importance);
      for (std::size_t r = 0; r < n; ++r) {
        const std::span<const double> row(x.row(static_cast<Eigen::Index>(r)).data(), static_cast<std::size_t>(x.cols()));
        margin(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += params.learning_rate * trees[c].predict_row(row);
      }
    }
    model.rounds.push_back(std::move(trees));
    model.train_loss.push_back(multiclass_log_loss(margin, y));
  }
  return model;
}

std::vector<int> predict(const GbtModel& model, const Matrix& x) {
  const Matrix m = model.margins(x);
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out[static_cast<std::size_t>(r)] = argmax_lowest<double>({m.row(r).data(), static_cast<std::size_t>(m.cols())});
  }
  return out;
}

std::vector<ImportanceEntry> feature_importance_report(const GbtModel& model, std::span<const std::string> feature_names) {
  std::vector<ImportanceEntry> out;
  for (std::size_t f = 0; f < model.importance.split_count.size(); ++f) {
    if (model.importance.split_count[f] == 0) continue;
    ImportanceEntry e;
    e.feature = static_cast<int>(f);
    e.name = f < feature_names.size() ? feature_names[f] : "f" + std::to_string(f);
    e.split_count = model.importance.split_count[f];
    e.total_gain = model.importance.total_gain[f];
    out.push_back(std::move(e));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.split_count != b.split_count) return a.split_count > b.split_count;
    return a.total_gain > b.total_gain;
  });
  return out;
}

}  // namespace wlc
