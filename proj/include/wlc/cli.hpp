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
#include <string>
#include <vector>

#include <json.hpp>

#include "wlc/features.hpp"

namespace wlc::cli {

inline constexpr const char* kVersion = "1.0.0";

/// Runs `wlclass` with args[0] the program name. Returns the process exit
/// code: 0 success, 1 usage, 2 data error, 3 non-convergence.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

/// Labelled feature matrix as stored on disk: a CSV with header
/// `label,<feature names>` and a JSON sidecar at `<path>.json`.
struct FeatureFile {
  FeatureMatrix features;
  std::vector<int> labels;
  std::vector<std::string> class_names;
  nlohmann::json sidecar;
};

void write_feature_file(const FeatureFile& file, const std::filesystem::path& path);
FeatureFile read_feature_file(const std::filesystem::path& path);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace wlc::cli
