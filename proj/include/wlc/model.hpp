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
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "wlc/forest.hpp"
#include "wlc/gbt.hpp"
#include "wlc/svm.hpp"

namespace wlc {

using Model = std::variant<ForestModel, SvmEnsemble, GbtModel>;

/// "rf", "svm" or "gbt".
std::string family_of(const Model& model);
int feature_count_of(const Model& model);
int class_count_of(const Model& model);

/// ShapeMismatch when x has the wrong number of columns.
std::vector<int> predict(const Model& model, const Matrix& x);

/// A trained model plus the provenance record it was saved with (dataset
/// hash, standardizer, reduction, hyperparameters, seed).
struct ModelFile {
  Model model;
  nlohmann::json provenance;
};

/// Binary layout: "WLC1", u32 format version, u32 section count, then
/// sections of (4-byte tag, u64 length, payload). Tags: PROV (JSON text)
/// and one of FRST, SVME, GBTM. All integers little-endian, doubles as
/// IEEE-754 bit patterns.
std::vector<std::uint8_t> serialize_model(const ModelFile& file);
/// CorruptModel on any structural defect.
ModelFile deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const ModelFile& file, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace wlc
