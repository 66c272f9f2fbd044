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


#include "wlc/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <unordered_map>

#include "wlc/error.hpp"
#include "wlc/parallel.hpp"
#include "wlc/tree.hpp"

namespace wlc {
namespace {

constexpr double kTau = 1e-12;

std::span<const double> row_of(const Matrix& x, Eigen::Index r) {
  return {x.row(r).data(), static_cast<std::size_t>(x.cols())};
}

// Rows of Q_ij = y_i y_j K(x_i, x_j), computed on demand and kept in an LRU
// cache bounded by a byte budget.
class KernelRows {
 public:
  KernelRows(const Matrix& x, std::span<const int> y, const Kernel& kernel, std::size_t budget)
      : x_(x), y_(y), kernel_(kernel), n_(static_cast<std::size_t>(x.rows())) {
    capacity_ = std::max<std::size_t>(2, budget / std::max<std::size_t>(1, n_ * sizeof(double)));
    diag_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) diag_[i] = kernel_(row_of(x_, static_cast<Eigen::Index>(i)), row_of(x_, static_cast<Eigen::Index>(i)));
  }

  const std::vector<double>& row(std::size_t i) {
    if (auto it = index_.find(i); it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->second;
    }
    if (lru_.size() >= capacity_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
    }
    std::vector<double> q(n_);
    const auto xi = row_of(x_, static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < n_; ++j) {
      q[j] = static_cast<double>(y_[i] * y_[j]) * kernel_(xi, row_of(x_, static_cast<Eigen::Index>(j)));
    }
    lru_.emplace_front(i, std::move(q));
    index_[i] = lru_.begin();
    return lru_.front().second;
  }

  double diag(std::size_t i) const { return diag_[i]; }

 private:
  const Matrix& x_;
  std::span<const int> y_;
  Kernel kernel_;
  std::size_t n_;
  std::size_t capacity_;
  std::vector<double> diag_;
  std::list<std::pair<std::size_t, std::vector<double>>> lru_;
  std::unordered_map<std::size_t, std::list<std::pair<std::size_t, std::vector<double>>>::iterator> index_;
};

}  // namespace

double Kernel::operator()(std::span<const double> a, std::span<const double> b) const {
  if (kind == KernelKind::Linear) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  }
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

double default_rbf_gamma(const Matrix& x) {
  if (x.size() == 0) return 1.0;
  const double mean = x.mean();
  const double var = (x.array() - mean).square().mean();
  if (!(var > 0.0)) return 1.0;
  return 1.0 / (static_cast<double>(x.cols()) * var);
}

double SvmBinary::decision(std::span<const double> row) const {
  double f = bias;
  for (Eigen::Index s = 0; s < support_vectors.rows(); ++s) {
    f += coefficients[static_cast<std::size_t>(s)] * kernel(row_of(support_vectors, s), row);
  }
  return f;
}

SvmBinary train_svm_binary(const Matrix& x, std::span<const int> y, double C, const Kernel& kernel, const SmoOptions& options) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n == 0) throw Error(ErrorCode::EmptyInput, "cannot train an SVM on zero rows");
  if (y.size() != n) throw Error(ErrorCode::ShapeMismatch, "X rows and y length differ");
  if (!(C > 0.0)) throw Error(ErrorCode::InvalidArgument, "C must be positive");
  bool has_pos = false, has_neg = false;
  for (int v : y) {
    if (v == 1) has_pos = true;
    else if (v == -1) has_neg = true;
    else throw Error(ErrorCode::InvalidArgument, "binary SVM labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) throw Error(ErrorCode::ClassAbsent, "binary SVM needs examples of both signs");

  KernelRows q(x, y, kernel, options.cache_bytes);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // Q alpha - e
  const std::size_t max_iter = options.max_iterations != 0 ? options.max_iterations : std::max<std::size_t>(10'000'000, 100 * n);
  auto in_up = [&](std::size_t t) { return (y[t] == 1 && alpha[t] < C) || (y[t] == -1 && alpha[t] > 0.0); };
  auto in_low = [&](std::size_t t) { return (y[t] == 1 && alpha[t] > 0.0) || (y[t] == -1 && alpha[t] < C); };

  SvmBinary model;
  model.kernel = kernel;
  model.C = C;
  model.converged = false;
  std::size_t iter = 0;
  for (; iter < max_iter; ++iter) {
    // i: maximal violator in I_up
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (in_up(t) && -y[t] * grad[t] > gmax) {
        gmax = -y[t] * grad[t];
        i = t;
      }
    }
    // j: best second-order decrease in I_low; also track M(alpha)
    double gmin = std::numeric_limits<double>::infinity();
    double best_obj = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    const std::vector<double>* qi = i < n ? &q.row(i) : nullptr;
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double v = -y[t] * grad[t];
      gmin = std::min(gmin, v);
      if (qi == nullptr) continue;
      const double b = gmax - v;
      if (b > 0.0) {
        double a = q.diag(i) + q.diag(t) - 2.0 * y[i] * y[t] * (*qi)[t];
        if (a <= 0.0) a = kTau;
        const double obj = -(b * b) / a;
        if (obj < best_obj) {
          best_obj = obj;
          j = t;
        }
      }
    }
    if (i == n || j == n || gmax - gmin < options.tolerance) {
      model.converged = true;
      break;
    }

    const std::vector<double>& row_i = q.row(i);
    const std::vector<double>& row_j = q.row(j);
    const double old_i = alpha[i];
    const double old_j = alpha[j];
    const double qij = row_i[j];
    if (y[i] != y[j]) {
      double quad = q.diag(i) + q.diag(j) + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = q.diag(i) + q.diag(j) - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) grad[t] += row_i[t] * di + row_j[t] * dj;
    if (options.on_iteration) options.on_iteration(alpha);
  }
  model.iterations = iter;

  // bias from free multipliers; midpoint of the feasible interval otherwise
  double free_sum = 0.0;
  std::size_t free_count = 0;
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= C) {
      if (y[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      free_sum += yg;
      ++free_count;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (ub + lb) / 2.0;
  model.bias = -rho;

  double objective = 0.0;
  for (std::size_t t = 0; t < n; ++t) objective += alpha[t] * (grad[t] - 1.0);  // alpha^T (Q alpha - 2e)
  model.dual_objective = -0.5 * objective;

  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) model.support_indices.push_back(t);
  }
  model.support_vectors.resize(static_cast<Eigen::Index>(model.support_indices.size()), x.cols());
  for (std::size_t s = 0; s < model.support_indices.size(); ++s) {
    const auto t = model.support_indices[s];
    model.support_vectors.row(static_cast<Eigen::Index>(s)) = x.row(static_cast<Eigen::Index>(t));
    model.coefficients.push_back(alpha[t] * y[t]);
  }
  model.alphas = std::move(alpha);
  return model;
}

bool SvmEnsemble::converged() const {
  return std::all_of(machines.begin(), machines.end(), [](const auto& m) { return m.converged; });
}

Matrix SvmEnsemble::decision_values(const Matrix& x) const {
  if (x.rows() > 0 && x.cols() != feature_count) {
    throw Error(ErrorCode::ShapeMismatch, "SVM expects " + std::to_string(feature_count) + " features, got " +
                                              std::to_string(x.cols()));
  }
  Matrix out(x.rows(), class_count);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (int c = 0; c < class_count; ++c) out(r, c) = machines[static_cast<std::size_t>(c)].decision(row_of(x, r));
  }
  return out;
}

SvmEnsemble train_svm_multiclass(const Matrix& x, std::span<const int> y, int class_count, const SvmParams& params) {
  if (class_count < 2) throw Error(ErrorCode::InvalidArgument, "multiclass SVM needs at least 2 classes");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error(ErrorCode::ShapeMismatch, "X rows and y length differ");
  std::vector<std::size_t> counts(static_cast<std::size_t>(class_count), 0);
  for (int c : y) {
    if (c < 0 || c >= class_count) throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(c));
    ++counts[static_cast<std::size_t>(c)];
  }
  for (int c = 0; c < class_count; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) throw Error(ErrorCode::ClassAbsent, "class " + std::to_string(c) + " has no training rows");
  }
  Kernel kernel = params.kernel;
  if (kernel.kind == KernelKind::Rbf && !(kernel.gamma > 0.0)) kernel.gamma = default_rbf_gamma(x);

  SvmEnsemble model;
  model.class_count = class_count;
  model.feature_count = static_cast<int>(x.cols());
  model.machines.resize(static_cast<std::size_t>(class_count));
  parallel_for(static_cast<std::size_t>(class_count), params.threads, [&](std::size_t c) {
    std::vector<int> signs(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) signs[i] = y[i] == static_cast<int>(c) ? 1 : -1;
    model.machines[c] = train_svm_binary(x, signs, params.C, kernel, params.smo);
  });
  return model;
}

std::vector<int> predict(const SvmEnsemble& model, const Matrix& x) {
  const Matrix scores = model.decision_values(x);
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    out[static_cast<std::size_t>(r)] = argmax_lowest<double>({scores.row(r).data(), static_cast<std::size_t>(scores.cols())});
  }
  return out;
}

}  // namespace wlc
