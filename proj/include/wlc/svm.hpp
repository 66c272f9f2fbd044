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
#include <functional>
#include <span>
#include <vector>

#include "wlc/tensor.hpp"

namespace wlc {

enum class KernelKind { Linear, Rbf };

struct Kernel {
  KernelKind kind = KernelKind::Rbf;
  /// RBF width; exp(-gamma * |a - b|^2). Ignored for linear kernels.
  double gamma = 1.0;

  double operator()(std::span<const double> a, std::span<const double> b) const;

  static Kernel linear() { return {KernelKind::Linear, 0.0}; }
  static Kernel rbf(double gamma) { return {KernelKind::Rbf, gamma}; }

  friend bool operator==(const Kernel&, const Kernel&) = default;
};

/// 1 / (d * var(X)) over all entries of X; 1 when X has zero variance.
double default_rbf_gamma(const Matrix& x);

struct SmoOptions {
  /// Stop when the maximal KKT violation m(a) - M(a) falls below this.
  double tolerance = 1e-3;
  /// 0 means max(10'000'000, 100 n).
  std::size_t max_iterations = 0;
  /// Kernel row cache budget.
  std::size_t cache_bytes = std::size_t{256} << 20;
  /// Called after every update with the current multipliers.
  std::function<void(std::span<const double>)> on_iteration;
};

/// Soft-margin binary SVM. decision(x) = sum_i coef_i K(sv_i, x) + bias with
/// coef_i = alpha_i y_i over the support vectors.
struct SvmBinary {
  /// One multiplier per training row, each in [0, C].
  std::vector<double> alphas;
  double bias = 0.0;
  std::vector<std::size_t> support_indices;
  Matrix support_vectors;
  std::vector<double> coefficients;
  Kernel kernel;
  double C = 1.0;
  /// Dual objective sum(alpha) - 1/2 alpha^T Q alpha at the returned iterate.
  double dual_objective = 0.0;
  std::size_t iterations = 0;
  /// False when max_iterations was hit; the iterate is still usable.
  bool converged = true;

  double decision(std::span<const double> row) const;

  friend bool operator==(const SvmBinary&, const SvmBinary&) = default;
};

/// Sequential minimal optimization on the dual with second-order working set
/// selection. `y` holds +1/-1; both signs must occur.
SvmBinary train_svm_binary(const Matrix& x, std::span<const int> y, double C, const Kernel& kernel,
                           const SmoOptions& options = {});

/// One-vs-rest ensemble, one machine per class.
struct SvmEnsemble {
  std::vector<SvmBinary> machines;
  int class_count = 0;
  int feature_count = 0;

  bool converged() const;
  /// rows x class_count decision values.
  Matrix decision_values(const Matrix& x) const;

  friend bool operator==(const SvmEnsemble&, const SvmEnsemble&) = default;
};

struct SvmParams {
  double C = 1.0;
  /// Kernel to use; an RBF kernel with gamma <= 0 gets default_rbf_gamma(X).
  Kernel kernel = Kernel::rbf(0.0);
  SmoOptions smo;
  unsigned threads = 0;
};

/// ClassAbsent when a class in [0, class_count) has no training rows.
SvmEnsemble train_svm_multiclass(const Matrix& x, std::span<const int> y, int class_count, const SvmParams& params);

/// Argmax of decision values, ties toward the lowest class index.
std::vector<int> predict(const SvmEnsemble& model, const Matrix& x);

}  // namespace wlc
