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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wlc/archive.hpp"
#include "wlc/raw_csv.hpp"

namespace wlc {

inline constexpr std::size_t kDefaultWindowLength = 540;

enum class WindowKind { Start, Middle, Random };

/// Where to cut a fixed-length window from a trial. `seed` only matters for
/// Random windows.
struct WindowPolicy {
  WindowKind kind = WindowKind::Start;
  std::uint64_t seed = 0;
  std::size_t length = kDefaultWindowLength;

  static WindowPolicy start(std::size_t length = kDefaultWindowLength) { return {WindowKind::Start, 0, length}; }
  static WindowPolicy middle(std::size_t length = kDefaultWindowLength) { return {WindowKind::Middle, 0, length}; }
  static WindowPolicy random(std::uint64_t seed, std::size_t length = kDefaultWindowLength) {
    return {WindowKind::Random, seed, length};
  }
};

std::string to_string(WindowKind kind);
WindowKind parse_window_kind(std::string_view text);

struct WindowedTrial {
  Matrix data;
  int label = -1;
  std::size_t source_offset = 0;
};

/// Trials with at least `length` samples, in input order.
std::vector<RawTrial> filter_min_length(std::span<const RawTrial> trials, std::size_t length);

/// Offset of the window `policy` selects in a series of n samples. Random
/// offsets are uniform on [0, n - length], drawn from a generator seeded by
/// (policy.seed, job_id). TooShort when n < length.
std::size_t window_offset(std::size_t n, const std::string& job_id, const WindowPolicy& policy);

WindowedTrial extract_window(const RawTrial& trial, const WindowPolicy& policy);

struct SplitOptions {
  double train_ratio = 0.8;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

/// Splits jobs (not series) into train/test, stratified by class, and cuts
/// one window per series. Labels are remapped to 0..m-1 in taxonomy order.
/// TooFewTrials when some class cannot appear in both splits.
ChallengeDataset build_challenge_dataset(std::span<const RawTrial> trials, const WindowPolicy& policy,
                                         const SplitOptions& split);

}  // namespace wlc
