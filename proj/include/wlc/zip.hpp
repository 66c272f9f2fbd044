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
#include <vector>

namespace wlc::zip {

struct Entry {
  std::string name;
  std::vector<std::uint8_t> data;
};

/// Reads every member of an in-memory zip container. Stored and deflate
/// members are accepted, zip64 size fields are honoured, and CRC-32 is
/// verified. Container defects raise BadMagic or MalformedHeader.
std::vector<Entry> read(std::span<const std::uint8_t> bytes);

/// Writes stored (uncompressed) members with fixed timestamps, so identical
/// entries always produce identical bytes.
std::vector<std::uint8_t> write(std::span<const Entry> entries);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace wlc::zip
