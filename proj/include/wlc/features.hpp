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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wlc/tensor.hpp"

namespace wlc {

/// Per-sensor affine scaling fitted on training data, pooled over trials and
/// time steps, population standard deviation.
struct Standardizer {
  std::vector<double> means;
  std::vector<double> stds;
  /// Sensors with zero spread; they standardize to 0.
  std::vector<bool> constant;

  std::size_t sensors() const { return means.size(); }
  /// Content hash, recorded in feature provenance.
  std::string id() const;
};

/// Output of apply_standardizer. Reductions only accept this type, so
/// features can never be computed from raw readings by accident.
struct StandardizedTensor {
  Tensor3 tensor;
  std::string standardizer_id;
};

/// DegenerateInput when the tensor holds fewer than 2 samples in total.
Standardizer fit_standardizer(const Tensor3& x_train);
/// ShapeMismatch when the sensor count differs from the fitted one.
StandardizedTensor apply_standardizer(const Standardizer& standardizer, const Tensor3& x);

struct CovarianceOptions {
  /// Subtract each trial's own column means first (textbook covariance).
  bool center_per_trial = false;
  /// Divide by n - 1.
  bool unbiased_scale = false;
};

struct CovarianceFeatures {
  std::vector<double> values;
  /// (i, j), i <= j, for each entry of `values`, upper triangle row by row.
  std::vector<std::pair<int, int>> index_map;
};

/// Upper triangle of the sensor Gram matrix M^T M of one samples x sensors trial.
CovarianceFeatures covariance_features(const Matrix& trial, const CovarianceOptions& options = {});

/// Row-major concatenation of a samples x sensors trial: (s, j) -> s * sensors + j.
Vector flatten_trial(const Matrix& trial, std::size_t expected_samples = 0, std::size_t expected_sensors = 0);

struct PcaModel {
  Vector mean;
  /// k x d, orthonormal rows, ordered by decreasing explained variance.
  Matrix components;
  Vector explained_variance;
  std::size_t k = 0;
  /// Fewer than k non-zero singular values; trailing variances are 0.
  bool rank_deficient = false;

  std::string id() const;
};

/// Top-k principal axes of the rows of `x` via a thin SVD of the centered
/// matrix. explained_variance holds eigenvalues of the sample covariance
/// (divisor n - 1). Requires 2 <= rows, k <= rows, k <= cols.
PcaModel fit_pca(const Matrix& x, std::size_t k);
/// (x - mean) * components^T.
Matrix project_pca(const PcaModel& model, const Matrix& x);

/// How each stage of a feature matrix was produced.
struct FeatureProvenance {
  std::string standardizer_id;
  std::string reduction_id;
  bool standardized = false;
};

struct FeatureMatrix {
  Matrix data;
  std::vector<std::string> feature_names;
  FeatureProvenance provenance;
};

/// Names "cov(a,b)" for the upper-triangle positions of `sensors` channels,
/// using the GPU sensor names when there are 7.
std::vector<std::string> covariance_feature_names(std::size_t sensors);

FeatureMatrix covariance_feature_matrix(const StandardizedTensor& x, const CovarianceOptions& options = {},
                                        unsigned threads = 0);
/// trials x (samples * sensors) matrix of flattened trials.
Matrix flatten_tensor(const StandardizedTensor& x);
FeatureMatrix pca_feature_matrix(const PcaModel& model, const StandardizedTensor& x);

enum class Reduction { Covariance, Pca };

struct ReductionSpec {
  Reduction kind = Reduction::Covariance;
  std::size_t pca_k = 28;
  CovarianceOptions covariance;

  /// "cov", "cov+center", "pca-64", ...
  std::string label() const;
};

/// Standardize-then-reduce transform, fitted on one training tensor.
class FeaturePipeline {
 public:
  FeaturePipeline(const Tensor3& x_train, const ReductionSpec& spec, unsigned threads = 0);

  FeatureMatrix transform(const Tensor3& x) const;

  const Standardizer& standardizer() const { return standardizer_; }
  const std::optional<PcaModel>& pca() const { return pca_; }
  const ReductionSpec& spec() const { return spec_; }

 private:
  ReductionSpec spec_;
  unsigned threads_;
  Standardizer standardizer_;
  std::optional<PcaModel> pca_;
};

}  // namespace wlc
