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


#include "wlc/raw_csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "wlc/error.hpp"
#include "wlc/taxonomy.hpp"

namespace wlc {
namespace {

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto end = line.find(delim, start);
    auto field = line.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '"')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '"' || field.back() == '\r')) field.remove_suffix(1);
    out.push_back(field);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

bool is_missing(std::string_view field) {
  if (field.empty()) return true;
  std::string lower(field);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  return lower == "nan" || lower == "na" || lower == "null" || lower == "inf" || lower == "+inf" || lower == "-inf" ||
         lower == "infinity" || lower == "-infinity";
}

double parse_reading(std::string_view field, std::size_t line_no) {
  if (is_missing(field)) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::DtypeMismatch, "line " + std::to_string(line_no) + ": '" + std::string(field) + "' is not a number");
  }
  return v;
}

std::optional<int> parse_label(std::string_view field, std::size_t line_no) {
  if (field.empty()) return std::nullopt;
  int v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec == std::errc() && ptr == field.data() + field.size()) {
    if (v < 0 || v >= static_cast<int>(kClassCount)) {
      throw Error(ErrorCode::LabelOutOfRange, "line " + std::to_string(line_no) + ": label " + std::to_string(v));
    }
    return v;
  }
  return find_class(field);
}

struct Group {
  RawTrial trial;
  std::vector<std::vector<double>> rows;
  bool label_seen = false;
};

}  // namespace

std::vector<RawTrial> parse_raw_csv(std::string_view text, SensorKind kind, const IngestOptions& options) {
  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start < text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      auto line = text.substr(start, end - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty()) lines.push_back(line);
      start = end + 1;
    }
  }
  if (lines.empty()) throw Error(ErrorCode::EmptyFile, "no header row");
  const char delim = lines[0].find(',') == std::string_view::npos && lines[0].find('\t') != std::string_view::npos ? '\t' : ',';
  const auto header = split(lines[0], delim);

  std::vector<std::string_view> schema;
  if (kind == SensorKind::Gpu) schema.assign(kGpuSensors.begin(), kGpuSensors.end());
  else schema.assign(kCpuMetrics.begin(), kCpuMetrics.end());

  int job_col = -1, time_col = -1, label_col = -1, node_col = -1, gpu_col = -1;
  std::vector<int> sensor_col(schema.size(), -1);
  std::set<std::string_view> extra;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = header[c];
    const int ci = static_cast<int>(c);
    if (name == "job_id") job_col = ci;
    else if (name == "timestamp") time_col = ci;
    else if (name == "label") label_col = ci;
    else if (name == "node") node_col = ci;
    else if (name == "gpu_index" && kind == SensorKind::Gpu) gpu_col = ci;
    else if (auto it = std::find(schema.begin(), schema.end(), name); it != schema.end()) {
      auto& slot = sensor_col[static_cast<std::size_t>(it - schema.begin())];
      if (slot != -1) throw Error(ErrorCode::SchemaMismatch, "duplicate column '" + std::string(name) + "'");
      slot = ci;
    } else {
      extra.insert(name);
    }
  }
  std::string problems;
  if (job_col < 0) problems += " missing job_id;";
  if (time_col < 0) problems += " missing timestamp;";
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (sensor_col[j] < 0) problems += " missing " + std::string(schema[j]) + ";";
  }
  for (auto e : extra) problems += " unexpected " + std::string(e) + ";";
  if (!problems.empty()) throw Error(ErrorCode::SchemaMismatch, "header does not match the sensor table:" + problems);
  if (lines.size() < 2) throw Error(ErrorCode::EmptyFile, "header only, no samples");

  std::map<std::string, std::size_t> index;
  std::vector<Group> groups;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto fields = split(lines[li], delim);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::SchemaMismatch, "line " + std::to_string(li + 1) + " has " + std::to_string(fields.size()) +
                                                 " fields, header has " + std::to_string(header.size()));
    }
    const std::string job(fields[static_cast<std::size_t>(job_col)]);
    std::string device;
    if (node_col >= 0) device = std::string(fields[static_cast<std::size_t>(node_col)]);
    if (gpu_col >= 0 && !fields[static_cast<std::size_t>(gpu_col)].empty()) {
      device += (device.empty() ? "gpu" : "/gpu") + std::string(fields[static_cast<std::size_t>(gpu_col)]);
    }
    const std::string key = job + '\x1f' + device;
    auto [it, inserted] = index.try_emplace(key, groups.size());
    if (inserted) {
      groups.emplace_back();
      groups.back().trial.job_id = job;
      groups.back().trial.device = device;
      groups.back().trial.sensor_kind = kind;
    }
    auto& g = groups[it->second];
    if (label_col >= 0) {
      const auto field = fields[static_cast<std::size_t>(label_col)];
      if (!field.empty()) {
        const auto label = parse_label(field, li + 1);
        if (g.label_seen && label != g.trial.label) {
          throw Error(ErrorCode::LabelOutOfRange, "job '" + job + "' carries conflicting labels");
        }
        g.trial.label = label;
        g.label_seen = true;
      }
    }
    std::vector<double> row(schema.size() + 1);
    row[0] = parse_reading(fields[static_cast<std::size_t>(time_col)], li + 1);
    if (!std::isfinite(row[0])) throw Error(ErrorCode::DtypeMismatch, "line " + std::to_string(li + 1) + ": missing timestamp");
    for (std::size_t j = 0; j < schema.size(); ++j) {
      row[j + 1] = parse_reading(fields[static_cast<std::size_t>(sensor_col[j])], li + 1);
    }
    g.rows.push_back(std::move(row));
  }

  // all trials of one job share its label, whichever row carried it
  std::map<std::string, std::optional<int>> job_label;
  for (const auto& g : groups) {
    if (!g.label_seen) continue;
    auto [it, inserted] = job_label.try_emplace(g.trial.job_id, g.trial.label);
    if (!inserted && it->second != g.trial.label) {
      throw Error(ErrorCode::LabelOutOfRange, "job '" + g.trial.job_id + "' carries conflicting labels");
    }
  }

  std::vector<RawTrial> out;
  out.reserve(groups.size());
  for (auto& g : groups) {
    if (auto it = job_label.find(g.trial.job_id); it != job_label.end()) g.trial.label = it->second;
    std::stable_sort(g.rows.begin(), g.rows.end(), [](const auto& a, const auto& b) { return a[0] < b[0]; });
    std::vector<std::vector<double>> kept;
    kept.reserve(g.rows.size());
    for (auto& row : g.rows) {
      bool finite = true;
      for (std::size_t j = 1; j < row.size(); ++j) {
        if (std::isfinite(row[j])) continue;
        if (options.non_finite == NonFinitePolicy::ForwardFill && !kept.empty()) {
          row[j] = kept.back()[j];
        } else {
          finite = false;
        }
      }
      if (finite) kept.push_back(std::move(row));
    }
    if (kept.empty()) continue;
    auto& t = g.trial;
    t.timestamps.resize(kept.size());
    t.series.resize(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(schema.size()));
    for (std::size_t r = 0; r < kept.size(); ++r) {
      t.timestamps[r] = kept[r][0];
      for (std::size_t j = 0; j < schema.size(); ++j) t.series(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = kept[r][j + 1];
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<RawTrial> ingest_raw_csv(const std::filesystem::path& path, SensorKind kind, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto text = buf.str();
  if (text.empty()) throw Error(ErrorCode::EmptyFile, "'" + path.string() + "' is empty");
  return parse_raw_csv(text, kind, options);
}

std::string format_raw_csv(std::span<const RawTrial> trials) {
  std::ostringstream out;
  out.precision(17);
  const bool gpu = trials.empty() || trials.front().sensor_kind == SensorKind::Gpu;
  out << "job_id,label,node" << (gpu ? ",gpu_index" : "") << ",timestamp";
  if (gpu) {
    for (auto s : kGpuSensors) out << ',' << s;
  } else {
    for (auto s : kCpuMetrics) out << ',' << s;
  }
  out << '\n';
  for (const auto& t : trials) {
    std::string node = t.device;
    std::string gpu_index;
    if (auto pos = node.rfind("gpu"); gpu && pos != std::string::npos && (pos == 0 || node[pos - 1] == '/')) {
      gpu_index = node.substr(pos + 3);
      node = pos == 0 ? "" : node.substr(0, pos - 1);
    }
    const std::string label = t.label ? std::string(taxonomy()[static_cast<std::size_t>(*t.label)].name) : "";
    for (Eigen::Index r = 0; r < t.series.rows(); ++r) {
      out << t.job_id << ',' << label << ',' << node;
      if (gpu) out << ',' << gpu_index;
      out << ',' << t.timestamps[static_cast<std::size_t>(r)];
      for (Eigen::Index j = 0; j < t.series.cols(); ++j) out << ',' << t.series(r, j);
      out << '\n';
    }
  }
  return out.str();
}

void write_raw_csv(std::span<const RawTrial> trials, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot create '" + path.string() + "'");
  out << format_raw_csv(trials);
  if (!out) throw Error(ErrorCode::IoError, "write failed on '" + path.string() + "'");
}

}  // namespace wlc
