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


#include "wlc/archive.hpp"

#include <map>
#include <optional>

#include "wlc/error.hpp"
#include "wlc/npy.hpp"
#include "wlc/taxonomy.hpp"
#include "wlc/zip.hpp"

namespace wlc {
namespace {

Tensor3 decode_tensor(const npy::Array& array, std::string_view key) {
  const auto& shape = array.descriptor.shape;
  if (shape.size() != 3) throw Error(ErrorCode::ShapeMismatch, std::string(key) + " must be 3-D");
  if (shape[2] != kSensorCount) {
    throw Error(ErrorCode::ShapeMismatch, std::string(key) + " has " + std::to_string(shape[2]) + " sensors, expected 7");
  }
  Tensor3 t(shape[0], shape[1], shape[2]);
  t.data() = npy::as_float64(array);
  return t;
}

std::vector<std::int64_t> decode_labels(const npy::Array& array, std::string_view key, std::size_t trials) {
  const auto& shape = array.descriptor.shape;
  const bool column = shape.size() == 2 && shape[1] == 1;
  if (shape.size() != 1 && !column) throw Error(ErrorCode::ShapeMismatch, std::string(key) + " must be 1-D");
  if (shape[0] != trials) {
    throw Error(ErrorCode::ShapeMismatch, std::string(key) + " has " + std::to_string(shape[0]) + " labels for " +
                                              std::to_string(trials) + " trials");
  }
  return npy::as_int64(array);
}

// Turns a name array into a label-indexed table. The array is either already
// a table (indexed by label) or holds one name per trial.
std::vector<std::string> name_table(const std::vector<std::string>& names, const std::vector<int>& labels,
                                    std::string_view key) {
  int max_label = -1;
  for (int y : labels) max_label = std::max(max_label, y);
  const bool table_fits = static_cast<int>(names.size()) > max_label;
  if (names.size() != labels.size() || (names.size() <= kClassCount && table_fits)) {
    if (!table_fits) {
      throw Error(ErrorCode::LabelOutOfRange,
                  "label " + std::to_string(max_label) + " has no entry in " + std::string(key));
    }
    return names;
  }
  std::vector<std::optional<std::string>> table(static_cast<std::size_t>(max_label + 1));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& slot = table[static_cast<std::size_t>(labels[i])];
    if (!slot) {
      slot = names[i];
    } else if (normalize_name(*slot) != normalize_name(names[i])) {
      throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(labels[i]) + " is named both '" + *slot +
                                                  "' and '" + names[i] + "' in " + std::string(key));
    }
  }
  std::vector<std::string> out(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) out[i] = table[i].value_or("");
  return out;
}

}  // namespace

const std::string& ChallengeDataset::class_name(int label) const {
  const auto i = static_cast<std::size_t>(label);
  if (i < model_train.size() && !model_train[i].empty()) return model_train[i];
  if (i < model_test.size()) return model_test[i];
  throw Error(ErrorCode::LabelOutOfRange, "no name for label " + std::to_string(label));
}

void validate(const ChallengeDataset& d) {
  if (d.x_train.sensors() != kSensorCount || d.x_test.sensors() != kSensorCount) {
    throw Error(ErrorCode::ShapeMismatch, "trailing dimension must be 7");
  }
  if (d.x_train.samples() != d.x_test.samples()) {
    throw Error(ErrorCode::ShapeMismatch, "train and test windows differ in length (" + std::to_string(d.x_train.samples()) +
                                              " vs " + std::to_string(d.x_test.samples()) + ")");
  }
  if (d.y_train.size() != d.x_train.trials() || d.y_test.size() != d.x_test.trials()) {
    throw Error(ErrorCode::ShapeMismatch, "label count differs from trial count");
  }
  auto check = [](const std::vector<int>& ys, const std::vector<std::string>& table, std::string_view split) {
    for (int y : ys) {
      if (y < 0 || y >= static_cast<int>(kClassCount)) {
        throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(y) + " outside [0, 25] in " + std::string(split));
      }
      if (static_cast<std::size_t>(y) >= table.size()) {
        throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(y) + " has no class name in " + std::string(split));
      }
    }
  };
  check(d.y_train, d.model_train, "train");
  check(d.y_test, d.model_test, "test");
  const auto shared = std::min(d.model_train.size(), d.model_test.size());
  for (std::size_t i = 0; i < shared; ++i) {
    if (!d.model_train[i].empty() && !d.model_test[i].empty() &&
        normalize_name(d.model_train[i]) != normalize_name(d.model_test[i])) {
      throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(i) + " is '" + d.model_train[i] + "' in train but '" +
                                                  d.model_test[i] + "' in test");
    }
  }
}

ChallengeDataset decode_challenge_archive(std::span<const std::uint8_t> bytes) {
  std::map<std::string, std::vector<std::uint8_t>, std::less<>> members;
  for (auto& e : zip::read(bytes)) {
    std::string key = e.name;
    if (key.size() > 4 && key.ends_with(".npy")) key.resize(key.size() - 4);
    members[key] = std::move(e.data);
  }
  std::map<std::string_view, npy::Array> arrays;
  for (auto key : kArchiveKeys) {
    auto it = members.find(key);
    if (it == members.end()) throw Error(ErrorCode::MissingKey, std::string(key));
    arrays[key] = npy::parse_array(it->second);
  }

  ChallengeDataset d;
  d.x_train = decode_tensor(arrays["X_train"], "X_train");
  d.x_test = decode_tensor(arrays["X_test"], "X_test");
  const auto raw_train = decode_labels(arrays["y_train"], "y_train", d.x_train.trials());
  const auto raw_test = decode_labels(arrays["y_test"], "y_test", d.x_test.trials());
  const auto names_train = npy::as_strings(arrays["model_train"]);
  const auto names_test = npy::as_strings(arrays["model_test"]);

  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  for (auto y : raw_train) lo = std::min(lo, y), hi = std::max(hi, y);
  for (auto y : raw_test) lo = std::min(lo, y), hi = std::max(hi, y);
  const auto table_size = static_cast<std::int64_t>(std::max(names_train.size(), names_test.size()));
  const bool tables = names_train.size() != raw_train.size() || names_test.size() != raw_test.size();
  d.label_base = (lo >= 1 && (hi > static_cast<std::int64_t>(kClassCount) - 1 || (tables && hi == table_size))) ? 1 : 0;

  auto normalize = [&](const std::vector<std::int64_t>& raw, std::string_view key) {
    std::vector<int> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const auto y = raw[i] - d.label_base;
      if (y < 0 || y >= static_cast<std::int64_t>(kClassCount)) {
        throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(raw[i]) + " in " + std::string(key));
      }
      out[i] = static_cast<int>(y);
    }
    return out;
  };
  d.y_train = normalize(raw_train, "y_train");
  d.y_test = normalize(raw_test, "y_test");
  d.model_train = name_table(names_train, d.y_train, "model_train");
  d.model_test = name_table(names_test, d.y_test, "model_test");
  validate(d);
  return d;
}

std::vector<std::uint8_t> encode_challenge_archive(const ChallengeDataset& d) {
  validate(d);
  auto shape_of = [](const Tensor3& t) { return std::vector<std::size_t>{t.trials(), t.samples(), t.sensors()}; };
  const std::vector<std::int64_t> y_train(d.y_train.begin(), d.y_train.end());
  const std::vector<std::int64_t> y_test(d.y_test.begin(), d.y_test.end());
  std::vector<zip::Entry> entries;
  entries.push_back({"X_train.npy", npy::serialize(npy::make_float64(shape_of(d.x_train), d.x_train.data()))});
  entries.push_back({"y_train.npy", npy::serialize(npy::make_int64(y_train))});
  entries.push_back({"model_train.npy", npy::serialize(npy::make_unicode(d.model_train))});
  entries.push_back({"X_test.npy", npy::serialize(npy::make_float64(shape_of(d.x_test), d.x_test.data()))});
  entries.push_back({"y_test.npy", npy::serialize(npy::make_int64(y_test))});
  entries.push_back({"model_test.npy", npy::serialize(npy::make_unicode(d.model_test))});
  return zip::write(entries);
}

ChallengeDataset read_challenge_archive(const std::filesystem::path& path) {
  return decode_challenge_archive(zip::read_file(path));
}

void write_challenge_archive(const ChallengeDataset& dataset, const std::filesystem::path& path) {
  zip::write_file(path, encode_challenge_archive(dataset));
}

}  // namespace wlc
