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

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wlc/tensor.hpp"

namespace wlc {

/// Windowed train/test splits as stored in a challenge archive.
///
/// x_* are trials x samples x 7 tensors in kGpuSensors order, y_* are 0-based
/// labels, and model_* are class-name tables indexed by label.
struct ChallengeDataset {
  Tensor3 x_train;
  std::vector<int> y_train;
  std::vector<std::string> model_train;
  Tensor3 x_test;
  std::vector<int> y_test;
  std::vector<std::string> model_test;
  /// Label base found in the source file (0 or 1). Labels above are always
  /// 0-based and archives are always written 0-based.
  int label_base = 0;

  std::size_t samples() const { return x_train.samples(); }
  /// Number of classes, i.e. the larger of the two name tables.
  std::size_t class_count() const { return std::max(model_train.size(), model_test.size()); }
  /// Display name for a label, taken from the training table when present.
  const std::string& class_name(int label) const;

  /// Element-wise equality of tensors, labels and name tables.
  friend bool operator==(const ChallengeDataset& a, const ChallengeDataset& b) {
    return a.x_train == b.x_train && a.y_train == b.y_train && a.model_train == b.model_train && a.x_test == b.x_test &&
           a.y_test == b.y_test && a.model_test == b.model_test;
  }
};

/// Member keys, in the order they are written.
inline constexpr std::array<std::string_view, 6> kArchiveKeys = {"X_train", "y_train", "model_train",
                                                                 "X_test",  "y_test",  "model_test"};

/// Checks every dataset invariant; throws ShapeMismatch or LabelOutOfRange.
void validate(const ChallengeDataset& dataset);

ChallengeDataset decode_challenge_archive(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_challenge_archive(const ChallengeDataset& dataset);

ChallengeDataset read_challenge_archive(const std::filesystem::path& path);
void write_challenge_archive(const ChallengeDataset& dataset, const std::filesystem::path& path);

}  // namespace wlc
