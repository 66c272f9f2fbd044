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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wlc/features.hpp"
#include "wlc/model.hpp"

namespace wlc {

enum class ModelFamily { Rf, Svm, Gbt };

std::string to_string(ModelFamily family);
ModelFamily parse_family(std::string_view text);

/// Family plus the full hyperparameter set for each family; only the
/// selected family's block is used.
struct ModelConfig {
  ModelFamily family = ModelFamily::Rf;
  ForestParams forest;
  SvmParams svm;
  GbtParams gbt;

  /// Sets a named hyperparameter: rf {n_trees, max_depth, min_leaf,
  /// max_features}, svm {C, gamma, linear}, gbt {rounds, learning_rate,
  /// max_depth, gamma, alpha, lambda, min_child_weight}. InvalidArgument for
  /// unknown names.
  void set(const std::string& name, double value);
  void set_threads(unsigned threads);
  nlohmann::json to_json() const;
};

Model train_model(const ModelConfig& config, const Matrix& x, std::span<const int> y, int class_count);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;

  friend bool operator==(const Fold&, const Fold&) = default;
};

/// Stratified k-fold partition of [0, n). Each class is shuffled with a
/// generator derived from (seed, class) and dealt round-robin, continuing
/// where the previous class stopped, so per-class counts across folds differ
/// by at most one. BadK unless 2 <= k <= n.
std::vector<Fold> kfold_indices(std::size_t n, std::size_t k, std::span<const int> labels, std::uint64_t seed);

struct GridSpec {
  ModelConfig base;
  /// Hyperparameter lists in declaration order; the last varies fastest.
  std::vector<std::pair<std::string, std::vector<double>>> hyperparameters;
  /// Outermost grid axis.
  std::vector<ReductionSpec> reductions{ReductionSpec{}};
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct GridCell {
  ReductionSpec reduction;
  std::vector<std::pair<std::string, double>> params;

  std::string label() const;
};

/// Cartesian product of the grid in declaration order.
std::vector<GridCell> expand_grid(const GridSpec& spec);

struct CellResult {
  GridCell cell;
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
};

/// Which transform each fold's features came from.
struct FoldProvenance {
  std::size_t fold = 0;
  std::string reduction;
  std::string standardizer_id;
  std::string reduction_id;
};

struct CvResult {
  std::vector<CellResult> cells;
  std::size_t best_cell = 0;
  std::vector<FoldProvenance> fold_provenance;
  /// Pipeline and model refit on the whole training tensor with the best cell.
  std::optional<FeaturePipeline> pipeline;
  Model refit_model;
  ModelConfig refit_config;

  nlohmann::json to_json() const;
};

/// Grid search by k-fold cross-validation on raw (unstandardized) windows.
/// Standardizer and PCA are fitted per fold on that fold's training rows.
/// The best cell has the highest mean validation accuracy, ties to the
/// earliest cell.
CvResult grid_search(const Tensor3& x, std::span<const int> y, int class_count, const GridSpec& spec);

struct ClassMetrics {
  std::string name;
  std::size_t support = 0;
  double precision = 0.0;
  double recall = 0.0;
};

struct EvalReport {
  /// Percent.
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  /// confusion[true][predicted].
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<ClassMetrics> per_class;
  std::string dataset_id;
  nlohmann::json model_provenance;

  nlohmann::json to_json() const;
  /// Human-readable summary with per-class lines.
  std::string to_table() const;
};

EvalReport evaluate_predictions(std::span<const int> predicted, std::span<const int> truth,
                                std::span<const std::string> class_names);
EvalReport evaluate(const Model& model, const Matrix& x_test, std::span<const int> y_test,
                    std::span<const std::string> class_names);

/// Dataset names of the seven released archives, in table column order.
inline constexpr std::array<std::string_view, 7> kDatasetNames = {
    "60-start-1", "60-middle-1", "60-random-1", "60-random-2", "60-random-3", "60-random-4", "60-random-5"};
inline constexpr std::array<std::string_view, 7> kDatasetColumns = {"Start", "Middle", "R1", "R2", "R3", "R4", "R5"};

/// Reference test accuracy for (row, dataset), e.g. ("RF Cov.", "60-middle-1").
std::optional<double> reference_accuracy(std::string_view row, std::string_view dataset);

struct ReproduceOptions {
  std::vector<std::size_t> pca_ks{28, 64, 256, 512};
  std::vector<double> svm_C{0.1, 1.0, 10.0};
  std::vector<double> rf_trees{50, 100, 250};
  std::vector<double> gbt_gamma{0.0, 1.0};
  std::vector<double> gbt_alpha{0.0, 1.0};
  std::vector<double> gbt_lambda{1.0, 10.0};
  std::size_t gbt_rounds = 40;
  std::size_t folds_rf_svm = 10;
  std::size_t folds_gbt = 5;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct TableCell {
  std::string row;
  std::string dataset;
  std::optional<double> accuracy;
  std::optional<double> reference;
  std::vector<int> predictions;
  std::vector<int> truth;
  std::string best_cell;
  std::string note;
};

struct ResultsTable {
  std::vector<std::string> rows;
  std::vector<std::string> datasets;
  std::vector<TableCell> cells;

  const TableCell* find(std::string_view row, std::string_view dataset) const;
  nlohmann::json to_json() const;
  /// Layout of the reference table, accuracies to 2 decimals, with targets.
  std::string to_text() const;
};

/// Runs the baseline protocol for one family over the archives named in
/// `manifest` (dataset name -> path). rf/svm: PCA and covariance rows over
/// every dataset; gbt: covariance row on 60-random-1 only. Absent archives
/// leave empty cells; MissingArchive when no listed archive exists.
ResultsTable reproduce_table(const std::map<std::string, std::filesystem::path>& manifest, ModelFamily family,
                             const ReproduceOptions& options = {});

}  // namespace wlc
