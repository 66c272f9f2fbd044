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
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace wlc {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Dense row-major trials x samples x sensors block of float64 readings.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t trials, std::size_t samples, std::size_t sensors)
      : trials_(trials), samples_(samples), sensors_(sensors), data_(trials * samples * sensors, 0.0) {}

  std::size_t trials() const noexcept { return trials_; }
  std::size_t samples() const noexcept { return samples_; }
  std::size_t sensors() const noexcept { return sensors_; }
  std::size_t trial_stride() const noexcept { return samples_ * sensors_; }

  double& at(std::size_t t, std::size_t s, std::size_t j) { return data_[(t * samples_ + s) * sensors_ + j]; }
  double at(std::size_t t, std::size_t s, std::size_t j) const { return data_[(t * samples_ + s) * sensors_ + j]; }

  std::span<double> trial(std::size_t t) { return {data_.data() + t * trial_stride(), trial_stride()}; }
  std::span<const double> trial(std::size_t t) const { return {data_.data() + t * trial_stride(), trial_stride()}; }

  /// View of one trial as a samples x sensors row-major matrix.
  Eigen::Map<const Matrix> trial_matrix(std::size_t t) const {
    return {data_.data() + t * trial_stride(), static_cast<Eigen::Index>(samples_), static_cast<Eigen::Index>(sensors_)};
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  /// Copy of the listed trials, in the given order.
  Tensor3 select(std::span<const std::size_t> rows) const;

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  std::size_t trials_ = 0;
  std::size_t samples_ = 0;
  std::size_t sensors_ = 0;
  std::vector<double> data_;
};

inline Tensor3 Tensor3::select(std::span<const std::size_t> rows) const {
  Tensor3 out(rows.size(), samples_, sensors_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = trial(rows[i]);
    std::copy(src.begin(), src.end(), out.trial(i).begin());
  }
  return out;
}

/// Rows of `m` listed in `rows`, in order.
inline Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

template <typename T>
std::vector<T> select_items(std::span<const T> items, std::span<const std::size_t> rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(items[r]);
  return out;
}

}  // namespace wlc
