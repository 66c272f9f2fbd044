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

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wlc/tensor.hpp"

namespace wlc {

enum class SensorKind { Gpu, Cpu };

/// One (job, device) telemetry series with its class label.
struct RawTrial {
  std::string job_id;
  /// Device key within the job ("node/gpuN" for GPU series); empty when the
  /// source names no device.
  std::string device;
  /// Index into taxonomy(); nullopt when the label is unknown.
  std::optional<int> label;
  SensorKind sensor_kind = SensorKind::Gpu;
  std::vector<double> timestamps;
  /// n_samples x n_sensors, sensors in kGpuSensors or kCpuMetrics order.
  Matrix series;

  std::size_t n_samples() const { return static_cast<std::size_t>(series.rows()); }
  /// Unique key of the series: job_id plus device.
  std::string series_key() const { return device.empty() ? job_id : job_id + "@" + device; }
};

enum class NonFinitePolicy { DropRow, ForwardFill };

struct IngestOptions {
  NonFinitePolicy non_finite = NonFinitePolicy::DropRow;
};

/// Parses delimited telemetry with a header row. Required columns are
/// `job_id`, `timestamp` and exactly the sensor set of `kind`; optional ones
/// are `label`, `node` and `gpu_index`. Produces one trial per
/// (job_id, node, gpu_index) group in first-appearance order, rows stably
/// sorted by timestamp.
std::vector<RawTrial> ingest_raw_csv(const std::filesystem::path& path, SensorKind kind, const IngestOptions& options = {});
std::vector<RawTrial> parse_raw_csv(std::string_view text, SensorKind kind, const IngestOptions& options = {});

/// Writes trials in the layout parse_raw_csv reads back.
void write_raw_csv(std::span<const RawTrial> trials, const std::filesystem::path& path);
std::string format_raw_csv(std::span<const RawTrial> trials);

}  // namespace wlc
