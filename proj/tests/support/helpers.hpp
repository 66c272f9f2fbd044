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

#include <doctest.h>

#include <filesystem>
#include <string>

#include "wlc/error.hpp"
#include "wlc/rng.hpp"
#include "wlc/tensor.hpp"

namespace testing {

inline std::filesystem::path data_dir() { return WLC_TEST_DATA; }

// Fresh directory under the build tree, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(std::filesystem::temp_directory_path() / ("wlc-test-" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

inline wlc::Matrix random_matrix(wlc::Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  wlc::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

inline wlc::Tensor3 random_tensor(wlc::Rng& rng, std::size_t trials, std::size_t samples, std::size_t sensors) {
  wlc::Tensor3 t(trials, samples, sensors);
  for (auto& v : t.data()) v = rng.normal();
  return t;
}

}  // namespace testing

#define CHECK_ERROR_CODE(expr, expected)                  \
  do {                                                    \
    bool thrown_ = false;                                 \
    try {                                                 \
      (void)(expr);                                       \
    } catch (const wlc::Error& e) {                       \
      thrown_ = true;                                     \
      CHECK_MESSAGE(e.code() == (expected), e.what());    \
    }                                                     \
    CHECK_MESSAGE(thrown_, "expected an error: " #expr);  \
  } while (false)
