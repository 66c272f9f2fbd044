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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace wlc::npy {

enum class ElementType { Float64, Float32, Int64, Int32, Int16, Int8, UInt64, UInt32, UInt16, UInt8, Bytes, Unicode };
enum class ByteOrder { Little, Big };
enum class Layout { RowMajor, ColumnMajor };

/// Element type, byte order, layout and shape of one serialized array.
/// `string_length` is the fixed character count k of Bytes (`|Sk`) and
/// Unicode (`<Uk`, 4 bytes per character) elements, 0 otherwise.
struct ArrayDescriptor {
  ElementType element_type = ElementType::Float64;
  ByteOrder byte_order = ByteOrder::Little;
  Layout layout = Layout::RowMajor;
  std::vector<std::size_t> shape;
  std::size_t string_length = 0;

  std::size_t item_size() const;
  std::size_t element_count() const;
  std::size_t payload_size() const { return item_size() * element_count(); }
  /// numpy dtype string, e.g. "<f8" or "|S12".
  std::string descr() const;

  friend bool operator==(const ArrayDescriptor&, const ArrayDescriptor&) = default;
};

struct ParsedHeader {
  ArrayDescriptor descriptor;
  std::size_t payload_offset = 0;
};

/// Parses the magic, version and header dict at the start of `bytes`; the
/// payload itself is not required. Never reads out of bounds; every
/// failure is an Error with BadMagic, UnsupportedVersion, MalformedHeader or
/// UnsupportedDtype.
ParsedHeader parse_array_header(std::span<const std::uint8_t> bytes);

/// A decoded array: descriptor plus raw payload bytes in file order.
struct Array {
  ArrayDescriptor descriptor;
  std::vector<std::uint8_t> payload;
};

/// Header plus payload; MalformedHeader when the payload length differs from
/// the shape.
Array parse_array(std::span<const std::uint8_t> bytes);

/// Serializes with a version 1.0 header padded to a 64-byte boundary.
std::vector<std::uint8_t> serialize(const Array& array);

/// Numeric payload converted to float64 in row-major order (byte order and
/// column-major layout are resolved). DtypeMismatch for string arrays.
std::vector<double> as_float64(const Array& array);
/// Integer payload in row-major order. DtypeMismatch for non-integer arrays.
std::vector<std::int64_t> as_int64(const Array& array);
/// String payload with trailing NULs stripped. DtypeMismatch otherwise.
std::vector<std::string> as_strings(const Array& array);

Array make_float64(std::vector<std::size_t> shape, std::span<const double> values);
Array make_int64(std::span<const std::int64_t> values);
/// 1-D `<Uk` array with k the longest string (minimum 1). Strings must be ASCII.
Array make_unicode(std::span<const std::string> values);

}  // namespace wlc::npy
