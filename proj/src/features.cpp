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


#include "wlc/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "wlc/error.hpp"
#include "wlc/parallel.hpp"
#include "wlc/rng.hpp"
#include "wlc/taxonomy.hpp"

namespace wlc {
namespace {

std::string hex_hash(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t hash_doubles(std::uint64_t h, const double* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, p + i, 8);
    h = mix64(h ^ bits);
  }
  return h;
}

}  // namespace

std::string Standardizer::id() const {
  auto h = hash_doubles(fnv1a64("standardizer"), means.data(), means.size());
  h = hash_doubles(h, stds.data(), stds.size());
  return "std-" + hex_hash(h);
}

Standardizer fit_standardizer(const Tensor3& x) {
  const std::size_t rows = x.trials() * x.samples();
  if (rows < 2) throw Error(ErrorCode::DegenerateInput, "standardizer needs at least 2 samples, got " + std::to_string(rows));
  const std::size_t m = x.sensors();
  const auto& data = x.data();
  Standardizer s;
  s.means.assign(m, 0.0);
  s.stds.assign(m, 0.0);
  s.constant.assign(m, false);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < m; ++j) s.means[j] += data[r * m + j];
  }
  for (auto& v : s.means) v /= static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = data[r * m + j] - s.means[j];
      s.stds[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    s.stds[j] = std::sqrt(s.stds[j] / static_cast<double>(rows));
    s.constant[j] = !(s.stds[j] > 1e-12 * std::max(1.0, std::abs(s.means[j])));
  }
  return s;
}

StandardizedTensor apply_standardizer(const Standardizer& s, const Tensor3& x) {
  if (x.sensors() != s.sensors()) {
    throw Error(ErrorCode::ShapeMismatch, "tensor has " + std::to_string(x.sensors()) + " sensors, standardizer " +
                                              std::to_string(s.sensors()));
  }
  StandardizedTensor out{Tensor3(x.trials(), x.samples(), x.sensors()), s.id()};
  const std::size_t m = x.sensors();
  const auto& in = x.data();
  auto& o = out.tensor.data();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const std::size_t j = i % m;
    o[i] = s.constant[j] ? 0.0 : (in[i] - s.means[j]) / s.stds[j];
  }
  return out;
}

CovarianceFeatures covariance_features(const Matrix& trial, const CovarianceOptions& options) {
  const auto n = trial.rows();
  const auto m = trial.cols();
  Matrix gram;
  if (options.center_per_trial) {
    const Matrix centered = trial.rowwise() - trial.colwise().mean();
    gram = centered.transpose() * centered;
  } else {
    gram = trial.transpose() * trial;
  }
  if (options.unbiased_scale && n > 1) gram /= static_cast<double>(n - 1);
  CovarianceFeatures out;
  out.values.reserve(static_cast<std::size_t>(m * (m + 1) / 2));
  out.index_map.reserve(out.values.capacity());
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      out.values.push_back(gram(i, j));
      out.index_map.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return out;
}

Vector flatten_trial(const Matrix& trial, std::size_t expected_samples, std::size_t expected_sensors) {
  if ((expected_samples != 0 && static_cast<std::size_t>(trial.rows()) != expected_samples) ||
      (expected_sensors != 0 && static_cast<std::size_t>(trial.cols()) != expected_sensors)) {
    throw Error(ErrorCode::ShapeMismatch, "trial is " + std::to_string(trial.rows()) + "x" + std::to_string(trial.cols()));
  }
  // row-major storage already has (s, j) at s * cols + j
  return Eigen::Map<const Vector>(trial.data(), trial.size());
}

std::string PcaModel::id() const {
  auto h = hash_doubles(fnv1a64("pca"), mean.data(), static_cast<std::size_t>(mean.size()));
  h = hash_doubles(h, components.data(), static_cast<std::size_t>(components.size()));
  return "pca" + std::to_string(k) + "-" + hex_hash(h);
}

PcaModel fit_pca(const Matrix& x, std::size_t k) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  if (k == 0 || k > n || k > d) {
    throw Error(ErrorCode::InvalidArgument, "PCA dimension " + std::to_string(k) + " needs 1 <= k <= min(" +
                                                std::to_string(n) + " rows, " + std::to_string(d) + " columns)");
  }
  if (n < 2) throw Error(ErrorCode::DegenerateInput, "PCA needs at least 2 rows");

  PcaModel model;
  model.k = k;
  model.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - model.mean.transpose();
  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const Matrix v = svd.matrixV();

  const double cutoff = (sv.size() > 0 ? sv(0) : 0.0) * static_cast<double>(std::max(n, d)) *
                        std::numeric_limits<double>::epsilon();
  model.components.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  model.explained_variance.resize(static_cast<Eigen::Index>(k));
  for (std::size_t c = 0; c < k; ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    Vector axis = v.col(ci);
    // sign convention: largest-magnitude loading positive
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis(arg) < 0) axis = -axis;
    model.components.row(ci) = axis.transpose();
    const double s = sv(ci);
    if (s <= cutoff) {
      model.rank_deficient = true;
      model.explained_variance(ci) = 0.0;
    } else {
      model.explained_variance(ci) = s * s / static_cast<double>(n - 1);
    }
  }
  return model;
}

Matrix project_pca(const PcaModel& model, const Matrix& x) {
  if (x.cols() != model.mean.size()) {
    throw Error(ErrorCode::ShapeMismatch, "matrix has " + std::to_string(x.cols()) + " columns, PCA expects " +
                                              std::to_string(model.mean.size()));
  }
  return (x.rowwise() - model.mean.transpose()) * model.components.transpose();
}

std::vector<std::string> covariance_feature_names(std::size_t sensors) {
  std::vector<std::string> names;
  auto sensor_name = [&](std::size_t i) {
    return sensors == kSensorCount ? std::string(kGpuSensors[i]) : "s" + std::to_string(i);
  };
  for (std::size_t i = 0; i < sensors; ++i) {
    for (std::size_t j = i; j < sensors; ++j) names.push_back("cov(" + sensor_name(i) + "," + sensor_name(j) + ")");
  }
  return names;
}

FeatureMatrix covariance_feature_matrix(const StandardizedTensor& x, const CovarianceOptions& options, unsigned threads) {
  const auto& t = x.tensor;
  const std::size_t m = t.sensors();
  const std::size_t width = m * (m + 1) / 2;
  FeatureMatrix out;
  out.data.resize(static_cast<Eigen::Index>(t.trials()), static_cast<Eigen::Index>(width));
  parallel_for(t.trials(), threads, [&](std::size_t i) {
    const Matrix trial = t.trial_matrix(i);
    const auto f = covariance_features(trial, options);
    for (std::size_t c = 0; c < width; ++c) out.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = f.values[c];
  });
  out.feature_names = covariance_feature_names(m);
  out.provenance = {x.standardizer_id, ReductionSpec{Reduction::Covariance, 0, options}.label(), true};
  return out;
}

Matrix flatten_tensor(const StandardizedTensor& x) {
  const auto& t = x.tensor;
  return Eigen::Map<const Matrix>(t.data().data(), static_cast<Eigen::Index>(t.trials()),
                                  static_cast<Eigen::Index>(t.trial_stride()));
}

FeatureMatrix pca_feature_matrix(const PcaModel& model, const StandardizedTensor& x) {
  FeatureMatrix out;
  out.data = project_pca(model, flatten_tensor(x));
  for (std::size_t c = 0; c < model.k; ++c) out.feature_names.push_back("pc" + std::to_string(c + 1));
  out.provenance = {x.standardizer_id, model.id(), true};
  return out;
}

std::string ReductionSpec::label() const {
  if (kind == Reduction::Pca) return "pca-" + std::to_string(pca_k);
  std::string s = "cov";
  if (covariance.center_per_trial) s += "+center";
  if (covariance.unbiased_scale) s += "+unbiased";
  return s;
}

FeaturePipeline::FeaturePipeline(const Tensor3& x_train, const ReductionSpec& spec, unsigned threads)
    : spec_(spec), threads_(threads), standardizer_(fit_standardizer(x_train)) {
  if (spec_.kind == Reduction::Pca) {
    pca_ = fit_pca(flatten_tensor(apply_standardizer(standardizer_, x_train)), spec_.pca_k);
  }
}

FeatureMatrix FeaturePipeline::transform(const Tensor3& x) const {
  const auto standardized = apply_standardizer(standardizer_, x);
  if (pca_) return pca_feature_matrix(*pca_, standardized);
  return covariance_feature_matrix(standardized, spec_.covariance, threads_);
}

}  // namespace wlc
