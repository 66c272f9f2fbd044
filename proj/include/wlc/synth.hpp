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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wlc/raw_csv.hpp"
#include "wlc/tensor.hpp"

namespace wlc {

struct SynthClassSpec {
  std::string class_name;
  /// Per-sensor mean, kGpuSensors order.
  Vector mean_profile;
  /// 7x7 symmetric positive-definite correlation.
  Matrix correlation;
  /// Per-sensor standard deviation.
  Vector noise_scale;
  std::size_t min_length = 600;
  std::size_t max_length = 1000;
  std::size_t job_count = 10;
};

struct SynthCorpusSpec {
  std::vector<SynthClassSpec> classes;
  std::uint64_t seed = 0;
  /// Relative amplitude of the class-independent, job-specific disturbance
  /// added to every sample. 0 leaves only the class correlation.
  double job_noise = 0.0;
  /// Leading samples of each trial drawn from a per-job random correlation
  /// scaled by warmup_amplitude, so they carry no class signal.
  std::size_t warmup_samples = 0;
  double warmup_amplitude = 8.0;
  /// Total GPU memory; memory_free is written as total - memory_used.
  /// nullopt generates the two sensors independently from the correlation.
  std::optional<double> memory_total_mib = 32768.0;
  /// Clip to physical ranges (percentages to [0,100], others nonnegative).
  bool clip = true;
  unsigned threads = 1;
};

/// One trial per job, ordered by class then job index. Labels index taxonomy().
std::vector<RawTrial> generate_corpus(const SynthCorpusSpec& spec);

/// Default telemetry means and per-sensor spreads shared by all classes.
Vector default_mean_profile();
Vector default_noise_scale();

/// Random correlation from a seeded rotation of the eigenvalue profile.
Matrix random_correlation(std::span<const double> eigenvalues, std::uint64_t seed);

/// All 26 classes with job counts scaled from the per-class totals
/// (rounded, at least 3 per class).
SynthCorpusSpec default_26_class_spec(std::uint64_t seed, double scale = 0.1);

/// Four classes from different families, `jobs` jobs each.
SynthCorpusSpec default_4_class_spec(std::uint64_t seed, std::size_t jobs = 100);

}  // namespace wlc
