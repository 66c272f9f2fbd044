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
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace wlc {

/// GPU sensors in archive order (trailing tensor dimension).
inline constexpr std::array<std::string_view, 7> kGpuSensors = {
    "utilization_gpu_pct", "utilization_memory_pct", "memory_free_MiB", "memory_used_MiB",
    "temperature_gpu",     "temperature_memory",     "power_draw_W"};

/// CPU-side job metrics.
inline constexpr std::array<std::string_view, 8> kCpuMetrics = {
    "CPUFrequency", "CPUTime", "CPUUtilization", "RSS", "VMSize", "Pages", "ReadMB", "WriteMB"};

inline constexpr std::size_t kSensorCount = kGpuSensors.size();
inline constexpr std::size_t kClassCount = 26;

struct ClassInfo {
  std::string_view name;
  std::string_view family;
  int job_count;
};

/// The 26 labelled architectures with their job counts, grouped by family.
std::span<const ClassInfo> taxonomy();

/// Index into taxonomy() of a class name. Matching ignores case and the
/// separators '_', '-', '.', and ' '.
std::optional<int> find_class(std::string_view name);

/// Normalized spelling used for case-insensitive name comparison.
std::string normalize_name(std::string_view name);

}  // namespace wlc
