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


#include "wlc/taxonomy.hpp"

#include <cctype>

namespace wlc {
namespace {

constexpr std::array<ClassInfo, kClassCount> kTaxonomy = {{
    {"VGG11", "VGG", 185},
    {"VGG16", "VGG", 176},
    {"VGG19", "VGG", 199},
    {"Inception3", "Inception", 241},
    {"Inception4", "Inception", 243},
    {"ResNet50", "ResNet", 111},
    {"ResNet50_v1.5", "ResNet", 91},
    {"ResNet101", "ResNet", 77},
    {"ResNet101_v2", "ResNet", 54},
    {"ResNet152", "ResNet", 76},
    {"ResNet152_v2", "ResNet", 54},
    {"U3-32", "U-Net", 165},
    {"U3-64", "U-Net", 159},
    {"U3-128", "U-Net", 165},
    {"U4-32", "U-Net", 163},
    {"U4-64", "U-Net", 158},
    {"U4-128", "U-Net", 157},
    {"U5-32", "U-Net", 158},
    {"U5-64", "U-Net", 158},
    {"U5-128", "U-Net", 148},
    {"Bert", "Bert", 185},
    {"DistillBert", "DistillBert", 241},
    {"Dimenet", "DimeNet", 33},
    {"Schnet", "SchNet", 39},
    {"PNA", "PNA", 27},
    {"NNConv", "NNConv", 32},
}};

}  // namespace

std::span<const ClassInfo> taxonomy() { return kTaxonomy; }

std::string normalize_name(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  for (char c : name) {
    if (c == '_' || c == '-' || c == '.' || c == ' ') continue;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::optional<int> find_class(std::string_view name) {
  auto key = normalize_name(name);
  // both spellings occur in real job labels
  if (key == "distilbert") key = "distillbert";
  for (std::size_t i = 0; i < kTaxonomy.size(); ++i) {
    if (normalize_name(kTaxonomy[i].name) == key) return static_cast<int>(i);
  }
  return std::nullopt;
}

}  // namespace wlc
