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


#include "wlc/windowing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "wlc/error.hpp"
#include "wlc/parallel.hpp"
#include "wlc/rng.hpp"
#include "wlc/taxonomy.hpp"

namespace wlc {

std::string to_string(WindowKind kind) {
  switch (kind) {
    case WindowKind::Start: return "start";
    case WindowKind::Middle: return "middle";
    case WindowKind::Random: return "random";
  }
  return "?";
}

WindowKind parse_window_kind(std::string_view text) {
  if (text == "start") return WindowKind::Start;
  if (text == "middle") return WindowKind::Middle;
  if (text == "random") return WindowKind::Random;
  throw Error(ErrorCode::Usage, "unknown window policy '" + std::string(text) + "'");
}

std::vector<RawTrial> filter_min_length(std::span<const RawTrial> trials, std::size_t length) {
  std::vector<RawTrial> out;
  for (const auto& t : trials) {
    if (t.n_samples() >= length) out.push_back(t);
  }
  return out;
}

std::size_t window_offset(std::size_t n, const std::string& job_id, const WindowPolicy& policy) {
  if (policy.length == 0) throw Error(ErrorCode::InvalidArgument, "window length must be at least 1");
  if (n < policy.length) {
    throw Error(ErrorCode::TooShort, "series of " + std::to_string(n) + " samples is shorter than the " +
                                         std::to_string(policy.length) + "-sample window");
  }
  const std::size_t slack = n - policy.length;
  switch (policy.kind) {
    case WindowKind::Start:
      return 0;
    case WindowKind::Middle:
      return slack / 2;
    case WindowKind::Random: {
      Rng rng(derive_seed(policy.seed, "window", fnv1a64(job_id)));
      return static_cast<std::size_t>(rng.below(slack + 1));
    }
  }
  return 0;
}

WindowedTrial extract_window(const RawTrial& trial, const WindowPolicy& policy) {
  WindowedTrial w;
  w.source_offset = window_offset(trial.n_samples(), trial.job_id, policy);
  w.data = trial.series.middleRows(static_cast<Eigen::Index>(w.source_offset), static_cast<Eigen::Index>(policy.length));
  w.label = trial.label.value_or(-1);
  return w;
}

ChallengeDataset build_challenge_dataset(std::span<const RawTrial> trials, const WindowPolicy& policy,
                                         const SplitOptions& split) {
  if (!(split.train_ratio > 0.0 && split.train_ratio < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "split ratio must lie strictly between 0 and 1");
  }
  // jobs in first-appearance order, with their label
  std::vector<std::string> jobs;
  std::map<std::string, int> job_label;
  for (const auto& t : trials) {
    if (t.sensor_kind != SensorKind::Gpu || t.series.cols() != static_cast<Eigen::Index>(kSensorCount)) {
      throw Error(ErrorCode::ShapeMismatch, "series '" + t.series_key() + "' is not a 7-sensor GPU series");
    }
    if (!t.label) throw Error(ErrorCode::InvalidArgument, "series '" + t.series_key() + "' has no label");
    if (t.n_samples() < policy.length) {
      throw Error(ErrorCode::TooShort, "series '" + t.series_key() + "' has " + std::to_string(t.n_samples()) + " samples");
    }
    auto [it, inserted] = job_label.try_emplace(t.job_id, *t.label);
    if (inserted) jobs.push_back(t.job_id);
    else if (it->second != *t.label) throw Error(ErrorCode::LabelOutOfRange, "job '" + t.job_id + "' has conflicting labels");
  }

  std::map<int, std::vector<std::string>> by_class;
  for (const auto& j : jobs) by_class[job_label[j]].push_back(j);

  // Per-class train quotas: floor, then largest remainder until the total
  // reaches round(ratio * jobs). Every class keeps one job on each side.
  std::vector<int> classes;
  std::vector<std::size_t> quota;
  std::vector<double> remainder;
  std::size_t assigned = 0;
  for (const auto& [label, members] : by_class) {
    const std::size_t n = members.size();
    if (n < 2) {
      throw Error(ErrorCode::TooFewTrials, "class '" + std::string(taxonomy()[static_cast<std::size_t>(label)].name) +
                                               "' has " + std::to_string(n) + " job(s); both splits need one");
    }
    const double exact = split.train_ratio * static_cast<double>(n);
    std::size_t q = std::clamp<std::size_t>(static_cast<std::size_t>(std::floor(exact)), 1, n - 1);
    classes.push_back(label);
    quota.push_back(q);
    remainder.push_back(exact - static_cast<double>(q));
    assigned += q;
  }
  const auto target = static_cast<std::size_t>(std::llround(split.train_ratio * static_cast<double>(jobs.size())));
  std::vector<std::size_t> order(classes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < target && k < order.size(); ++k) {
    const auto c = order[k];
    if (quota[c] + 1 < by_class[classes[c]].size() && remainder[c] > 0.0) {
      ++quota[c];
      ++assigned;
    }
  }

  std::map<std::string, bool> in_train;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    auto members = by_class[classes[c]];
    Rng rng(derive_seed(split.seed, "split", static_cast<std::uint64_t>(classes[c])));
    rng.shuffle(std::span<std::string>(members));
    for (std::size_t i = 0; i < members.size(); ++i) in_train[members[i]] = i < quota[c];
  }

  std::vector<int> remap(kClassCount, -1);
  ChallengeDataset d;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    remap[static_cast<std::size_t>(classes[c])] = static_cast<int>(c);
    d.model_train.emplace_back(taxonomy()[static_cast<std::size_t>(classes[c])].name);
  }
  d.model_test = d.model_train;

  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t i = 0; i < trials.size(); ++i) (in_train[trials[i].job_id] ? train_rows : test_rows).push_back(i);

  auto fill = [&](const std::vector<std::size_t>& rows, Tensor3& x, std::vector<int>& y) {
    x = Tensor3(rows.size(), policy.length, kSensorCount);
    y.resize(rows.size());
    parallel_for(rows.size(), split.threads, [&](std::size_t i) {
      const auto& t = trials[rows[i]];
      const auto w = extract_window(t, policy);
      std::copy(w.data.data(), w.data.data() + w.data.size(), x.trial(i).begin());
      y[i] = remap[static_cast<std::size_t>(*t.label)];
    });
  };
  fill(train_rows, d.x_train, d.y_train);
  fill(test_rows, d.x_test, d.y_test);
  return d;
}

}  // namespace wlc
