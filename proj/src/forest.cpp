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


#include "wlc/forest.hpp"

#include <cmath>

#include "wlc/error.hpp"
#include "wlc/parallel.hpp"

namespace wlc {

ForestModel train_forest(const Matrix& x, std::span<const int> y, int class_count, const ForestParams& params) {
  if (params.n_trees == 0) throw Error(ErrorCode::InvalidArgument, "a forest needs at least one tree");
  if (x.rows() == 0) throw Error(ErrorCode::EmptyInput, "cannot train a forest on zero rows");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error(ErrorCode::ShapeMismatch, "X rows and y length differ");
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());

  TreeParams tree_params;
  tree_params.max_depth = params.max_depth;
  tree_params.min_leaf = params.min_leaf;
  tree_params.feature_subsample =
      params.max_features != 0 ? params.max_features : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));

  ForestModel model;
  model.n_trees = params.n_trees;
  model.seed = params.seed;
  model.feature_count = static_cast<int>(d);
  model.class_count = class_count;
  model.trees.resize(params.n_trees);
  parallel_for(params.n_trees, params.threads, [&](std::size_t t) {
    Rng rng(derive_seed(params.seed, "forest.tree", t));
    std::vector<std::size_t> sample(n);
    for (auto& r : sample) r = static_cast<std::size_t>(rng.below(n));
    model.trees[t] = train_tree(x, y, class_count, sample, tree_params, rng);
  });
  return model;
}

std::vector<std::vector<int>> forest_votes(const ForestModel& model, const Matrix& x) {
  if (x.rows() > 0 && x.cols() != model.feature_count) {
    throw Error(ErrorCode::ShapeMismatch, "forest expects " + std::to_string(model.feature_count) + " features, got " +
                                              std::to_string(x.cols()));
  }
  std::vector<std::vector<int>> votes(static_cast<std::size_t>(x.rows()), std::vector<int>(static_cast<std::size_t>(model.class_count), 0));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const std::span<const double> row(x.row(r).data(), static_cast<std::size_t>(x.cols()));
    for (const auto& tree : model.trees) ++votes[static_cast<std::size_t>(r)][static_cast<std::size_t>(tree.predict_row(row))];
  }
  return votes;
}

std::vector<int> predict(const ForestModel& model, const Matrix& x) {
  const auto votes = forest_votes(model, x);
  std::vector<int> out(votes.size());
  for (std::size_t r = 0; r < votes.size(); ++r) out[r] = argmax_lowest<int>(votes[r]);
  return out;
}

}  // namespace wlc
