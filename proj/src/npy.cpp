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


#include "wlc/npy.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <limits>
#include <optional>
#include <string_view>

#include "wlc/error.hpp"

namespace wlc::npy {
namespace {

constexpr std::uint8_t kMagic[6] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
constexpr std::size_t kMaxHeaderLength = 1u << 20;

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedHeader, what); }

bool checked_mul(std::size_t a, std::size_t b, std::size_t& out) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a) return false;
  out = a * b;
  return true;
}

// Minimal reader for the Python literal dict numpy writes:
// {'descr': '<f8', 'fortran_order': False, 'shape': (3, 4), }
class DictReader {
 public:
  explicit DictReader(std::string_view text) : text_(text) {}

  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' || text_[pos_] == '\r')) ++pos_;
  }
  bool consume(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!consume(c)) malformed(std::string("expected '") + c + "' in header dict");
  }
  std::string read_string() {
    skip_space();
    if (pos_ >= text_.size() || (text_[pos_] != '\'' && text_[pos_] != '"')) malformed("expected quoted string");
    const char quote = text_[pos_++];
    const auto end = text_.find(quote, pos_);
    if (end == std::string_view::npos) malformed("unterminated string");
    std::string s(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return s;
  }
  bool read_bool() {
    skip_space();
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    malformed("expected True or False");
  }
  std::size_t read_uint() {
    skip_space();
    std::size_t v = 0;
    std::size_t digits = 0;
    while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
      const auto d = static_cast<std::size_t>(text_[pos_] - '0');
      if (!checked_mul(v, 10, v) || v > std::numeric_limits<std::size_t>::max() - d) malformed("dimension overflow");
      v += d;
      ++pos_;
      ++digits;
    }
    // numpy on some platforms writes 3L
    if (pos_ < text_.size() && text_[pos_] == 'L') ++pos_;
    if (digits == 0) malformed("expected dimension");
    return v;
  }
  std::vector<std::size_t> read_shape() {
    expect('(');
    std::vector<std::size_t> shape;
    if (consume(')')) return shape;
    while (true) {
      shape.push_back(read_uint());
      if (shape.size() > 32) malformed("too many dimensions");
      if (consume(')')) return shape;
      expect(',');
      if (consume(')')) return shape;
    }
  }
  bool at_end() {
    skip_space();
    return pos_ == text_.size();
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

ArrayDescriptor parse_descr(const std::string& descr) {
  if (descr.size() < 2) throw Error(ErrorCode::UnsupportedDtype, "dtype '" + descr + "'");
  ArrayDescriptor d;
  const char order = descr[0];
  const char kind = descr[1];
  const std::string size_text = descr.substr(2);
  std::size_t size = 0;
  if (size_text.empty() || size_text.size() > 9 || !std::all_of(size_text.begin(), size_text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw Error(ErrorCode::UnsupportedDtype, "dtype '" + descr + "'");
  }
  size = std::stoul(size_text);
  switch (order) {
    case '<': d.byte_order = ByteOrder::Little; break;
    case '>': d.byte_order = ByteOrder::Big; break;
    case '|':
    case '=': d.byte_order = std::endian::native == std::endian::big ? ByteOrder::Big : ByteOrder::Little; break;
    default: throw Error(ErrorCode::UnsupportedDtype, "dtype '" + descr + "'");
  }
  auto fail = [&] { throw Error(ErrorCode::UnsupportedDtype, "dtype '" + descr + "'"); };
  switch (kind) {
    case 'f':
      if (size == 8) d.element_type = ElementType::Float64;
      else if (size == 4) d.element_type = ElementType::Float32;
      else fail();
      break;
    case 'i':
      if (size == 8) d.element_type = ElementType::Int64;
      else if (size == 4) d.element_type = ElementType::Int32;
      else if (size == 2) d.element_type = ElementType::Int16;
      else if (size == 1) d.element_type = ElementType::Int8;
      else fail();
      break;
    case 'u':
      if (size == 8) d.element_type = ElementType::UInt64;
      else if (size == 4) d.element_type = ElementType::UInt32;
      else if (size == 2) d.element_type = ElementType::UInt16;
      else if (size == 1) d.element_type = ElementType::UInt8;
      else fail();
      break;
    case 'S':
      if (size == 0) fail();
      d.element_type = ElementType::Bytes;
      d.string_length = size;
      break;
    case 'U':
      if (size == 0) fail();
      d.element_type = ElementType::Unicode;
      d.string_length = size;
      break;
    default:
      fail();
  }
  return d;
}

template <typename T>
T load(const std::uint8_t* p, bool swap) {
  std::array<std::uint8_t, sizeof(T)> buf;
  std::memcpy(buf.data(), p, sizeof(T));
  if (swap) std::reverse(buf.begin(), buf.end());
  T v;
  std::memcpy(&v, buf.data(), sizeof(T));
  return v;
}

bool needs_swap(ByteOrder order) {
  return (order == ByteOrder::Little) != (std::endian::native == std::endian::little);
}

// Maps a row-major flat index to the file-order element index.
std::vector<std::size_t> file_order(const ArrayDescriptor& d) {
  const std::size_t n = d.element_count();
  std::vector<std::size_t> idx(n);
  if (d.layout == Layout::RowMajor || d.shape.size() < 2) {
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }
  const std::size_t rank = d.shape.size();
  std::vector<std::size_t> coord(rank, 0);
  std::vector<std::size_t> col_stride(rank, 1);
  for (std::size_t a = 1; a < rank; ++a) col_stride[a] = col_stride[a - 1] * d.shape[a - 1];
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t f = 0;
    for (std::size_t a = 0; a < rank; ++a) f += coord[a] * col_stride[a];
    idx[i] = f;
    for (std::size_t a = rank; a-- > 0;) {
      if (++coord[a] < d.shape[a]) break;
      coord[a] = 0;
    }
  }
  return idx;
}

bool is_integer(ElementType t) {
  switch (t) {
    case ElementType::Int64: case ElementType::Int32: case ElementType::Int16: case ElementType::Int8:
    case ElementType::UInt64: case ElementType::UInt32: case ElementType::UInt16: case ElementType::UInt8:
      return true;
    default:
      return false;
  }
}

}  // namespace

std::size_t ArrayDescriptor::item_size() const {
  switch (element_type) {
    case ElementType::Float64: case ElementType::Int64: case ElementType::UInt64: return 8;
    case ElementType::Float32: case ElementType::Int32: case ElementType::UInt32: return 4;
    case ElementType::Int16: case ElementType::UInt16: return 2;
    case ElementType::Int8: case ElementType::UInt8: return 1;
    case ElementType::Bytes: return string_length;
    case ElementType::Unicode: return 4 * string_length;
  }
  return 0;
}

std::size_t ArrayDescriptor::element_count() const {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

std::string ArrayDescriptor::descr() const {
  const bool single_byte = item_size() == 1 || element_type == ElementType::Bytes;
  std::string s(1, single_byte ? '|' : (byte_order == ByteOrder::Little ? '<' : '>'));
  switch (element_type) {
    case ElementType::Float64: return s + "f8";
    case ElementType::Float32: return s + "f4";
    case ElementType::Int64: return s + "i8";
    case ElementType::Int32: return s + "i4";
    case ElementType::Int16: return s + "i2";
    case ElementType::Int8: return s + "i1";
    case ElementType::UInt64: return s + "u8";
    case ElementType::UInt32: return s + "u4";
    case ElementType::UInt16: return s + "u2";
    case ElementType::UInt8: return s + "u1";
    case ElementType::Bytes: return s + "S" + std::to_string(string_length);
    case ElementType::Unicode: return s + "U" + std::to_string(string_length);
  }
  return s;
}

ParsedHeader parse_array_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 6 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw Error(ErrorCode::BadMagic, "not a serialized array");
  }
  if (bytes.size() < 8) malformed("truncated before version");
  const unsigned major = bytes[6];
  const unsigned minor = bytes[7];
  if (minor != 0 || major < 1 || major > 3) {
    throw Error(ErrorCode::UnsupportedVersion, std::to_string(major) + "." + std::to_string(minor));
  }
  std::size_t header_length = 0;
  std::size_t offset = 0;
  if (major == 1) {
    if (bytes.size() < 10) malformed("truncated header length");
    header_length = bytes[8] | (static_cast<std::size_t>(bytes[9]) << 8);
    offset = 10;
  } else {
    if (bytes.size() < 12) malformed("truncated header length");
    header_length = bytes[8] | (static_cast<std::size_t>(bytes[9]) << 8) | (static_cast<std::size_t>(bytes[10]) << 16) |
                    (static_cast<std::size_t>(bytes[11]) << 24);
    offset = 12;
  }
  if (header_length > kMaxHeaderLength || header_length > bytes.size() - offset) malformed("header length exceeds input");
  const std::string_view text(reinterpret_cast<const char*>(bytes.data() + offset), header_length);

  DictReader reader(text);
  std::optional<std::string> descr;
  std::optional<bool> fortran;
  std::optional<std::vector<std::size_t>> shape;
  reader.expect('{');
  while (!reader.consume('}')) {
    const std::string key = reader.read_string();
    reader.expect(':');
    if (key == "descr") {
      descr = reader.read_string();
    } else if (key == "fortran_order") {
      fortran = reader.read_bool();
    } else if (key == "shape") {
      shape = reader.read_shape();
    } else {
      malformed("unexpected key '" + key + "'");
    }
    if (!reader.consume(',')) {
      reader.expect('}');
      break;
    }
  }
  if (!reader.at_end()) malformed("trailing bytes after header dict");
  if (!descr || !fortran || !shape) malformed("header dict lacks descr/fortran_order/shape");

  ParsedHeader out;
  out.descriptor = parse_descr(*descr);
  out.descriptor.layout = *fortran ? Layout::ColumnMajor : Layout::RowMajor;
  out.descriptor.shape = std::move(*shape);
  out.payload_offset = offset + header_length;

  std::size_t expected = out.descriptor.item_size();
  for (auto dim : out.descriptor.shape) {
    if (!checked_mul(expected, dim, expected)) malformed("shape overflows");
  }
  return out;
}

Array parse_array(std::span<const std::uint8_t> bytes) {
  auto header = parse_array_header(bytes);
  if (header.descriptor.payload_size() != bytes.size() - header.payload_offset) {
    malformed("payload is " + std::to_string(bytes.size() - header.payload_offset) + " bytes, shape requires " +
              std::to_string(header.descriptor.payload_size()));
  }
  Array a;
  a.descriptor = std::move(header.descriptor);
  a.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header.payload_offset), bytes.end());
  return a;
}

std::vector<std::uint8_t> serialize(const Array& array) {
  const auto& d = array.descriptor;
  if (array.payload.size() != d.payload_size()) {
    throw Error(ErrorCode::ShapeMismatch, "payload size does not match descriptor");
  }
  std::string dict = "{'descr': '" + d.descr() + "', 'fortran_order': " + (d.layout == Layout::ColumnMajor ? "True" : "False") +
                     ", 'shape': (";
  for (std::size_t i = 0; i < d.shape.size(); ++i) {
    dict += std::to_string(d.shape[i]);
    if (d.shape.size() == 1 || i + 1 < d.shape.size()) dict += ",";
    if (i + 1 < d.shape.size()) dict += " ";
  }
  dict += "), }";
  const std::size_t unpadded = 10 + dict.size() + 1;
  const std::size_t total = (unpadded + 63) / 64 * 64;
  dict.append(total - unpadded, ' ');
  dict += '\n';
  if (dict.size() > 0xffff) throw Error(ErrorCode::MalformedHeader, "header too long for version 1.0");

  std::vector<std::uint8_t> out(10 + dict.size() + array.payload.size());
  std::memcpy(out.data(), kMagic, 6);
  out[6] = 1;
  out[7] = 0;
  out[8] = static_cast<std::uint8_t>(dict.size() & 0xff);
  out[9] = static_cast<std::uint8_t>(dict.size() >> 8);
  std::memcpy(out.data() + 10, dict.data(), dict.size());
  if (!array.payload.empty()) std::memcpy(out.data() + 10 + dict.size(), array.payload.data(), array.payload.size());
  return out;
}

std::vector<double> as_float64(const Array& array) {
  const auto& d = array.descriptor;
  const bool swap = needs_swap(d.byte_order);
  const auto order = file_order(d);
  std::vector<double> out(order.size());
  const std::uint8_t* p = array.payload.data();
  const std::size_t w = d.item_size();
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::uint8_t* e = p + order[i] * w;
    switch (d.element_type) {
      case ElementType::Float64: out[i] = load<double>(e, swap); break;
      case ElementType::Float32: out[i] = load<float>(e, swap); break;
      case ElementType::Int64: out[i] = static_cast<double>(load<std::int64_t>(e, swap)); break;
      case ElementType::Int32: out[i] = load<std::int32_t>(e, swap); break;
      case ElementType::Int16: out[i] = load<std::int16_t>(e, swap); break;
      case ElementType::Int8: out[i] = load<std::int8_t>(e, swap); break;
      case ElementType::UInt64: out[i] = static_cast<double>(load<std::uint64_t>(e, swap)); break;
      case ElementType::UInt32: out[i] = load<std::uint32_t>(e, swap); break;
      case ElementType::UInt16: out[i] = load<std::uint16_t>(e, swap); break;
      case ElementType::UInt8: out[i] = load<std::uint8_t>(e, swap); break;
      default: throw Error(ErrorCode::DtypeMismatch, "expected numeric array, got " + d.descr());
    }
  }
  return out;
}

std::vector<std::int64_t> as_int64(const Array& array) {
  const auto& d = array.descriptor;
  if (!is_integer(d.element_type)) throw Error(ErrorCode::DtypeMismatch, "expected integer array, got " + d.descr());
  const bool swap = needs_swap(d.byte_order);
  const auto order = file_order(d);
  std::vector<std::int64_t> out(order.size());
  const std::size_t w = d.item_size();
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::uint8_t* e = array.payload.data() + order[i] * w;
    switch (d.element_type) {
      case ElementType::Int64: out[i] = load<std::int64_t>(e, swap); break;
      case ElementType::Int32: out[i] = load<std::int32_t>(e, swap); break;
      case ElementType::Int16: out[i] = load<std::int16_t>(e, swap); break;
      case ElementType::Int8: out[i] = load<std::int8_t>(e, swap); break;
      case ElementType::UInt64: {
        const auto v = load<std::uint64_t>(e, swap);
        if (v > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
          throw Error(ErrorCode::LabelOutOfRange, "uint64 value exceeds int64");
        }
        out[i] = static_cast<std::int64_t>(v);
        break;
      }
      case ElementType::UInt32: out[i] = load<std::uint32_t>(e, swap); break;
      case ElementType::UInt16: out[i] = load<std::uint16_t>(e, swap); break;
      case ElementType::UInt8: out[i] = load<std::uint8_t>(e, swap); break;
      default: break;
    }
  }
  return out;
}

std::vector<std::string> as_strings(const Array& array) {
  const auto& d = array.descriptor;
  if (d.element_type != ElementType::Bytes && d.element_type != ElementType::Unicode) {
    throw Error(ErrorCode::DtypeMismatch, "expected string array, got " + d.descr());
  }
  const bool swap = needs_swap(d.byte_order);
  const auto order = file_order(d);
  std::vector<std::string> out(order.size());
  const std::size_t w = d.item_size();
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::uint8_t* e = array.payload.data() + order[i] * w;
    std::string s;
    if (d.element_type == ElementType::Bytes) {
      s.assign(reinterpret_cast<const char*>(e), d.string_length);
    } else {
      for (std::size_t c = 0; c < d.string_length; ++c) {
        const auto cp = load<std::uint32_t>(e + 4 * c, swap);
        if (cp == 0) break;
        // UTF-8 encode
        if (cp < 0x80) {
          s += static_cast<char>(cp);
        } else if (cp < 0x800) {
          s += static_cast<char>(0xc0 | (cp >> 6));
          s += static_cast<char>(0x80 | (cp & 0x3f));
        } else if (cp < 0x10000) {
          s += static_cast<char>(0xe0 | (cp >> 12));
          s += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
          s += static_cast<char>(0x80 | (cp & 0x3f));
        } else if (cp < 0x110000) {
          s += static_cast<char>(0xf0 | (cp >> 18));
          s += static_cast<char>(0x80 | ((cp >> 12) & 0x3f));
          s += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
          s += static_cast<char>(0x80 | (cp & 0x3f));
        } else {
          throw Error(ErrorCode::DtypeMismatch, "invalid code point in string array");
        }
      }
    }
    while (!s.empty() && s.back() == '\0') s.pop_back();
    out[i] = std::move(s);
  }
  return out;
}

Array make_float64(std::vector<std::size_t> shape, std::span<const double> values) {
  Array a;
  a.descriptor.element_type = ElementType::Float64;
  a.descriptor.byte_order = ByteOrder::Little;
  a.descriptor.shape = std::move(shape);
  if (a.descriptor.element_count() != values.size()) throw Error(ErrorCode::ShapeMismatch, "value count does not match shape");
  a.payload.resize(values.size() * 8);
  const bool swap = needs_swap(ByteOrder::Little);
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(values[i]);
    if (swap) bits = __builtin_bswap64(bits);
    std::memcpy(a.payload.data() + 8 * i, &bits, 8);
  }
  return a;
}

Array make_int64(std::span<const std::int64_t> values) {
  Array a;
  a.descriptor.element_type = ElementType::Int64;
  a.descriptor.byte_order = ByteOrder::Little;
  a.descriptor.shape = {values.size()};
  a.payload.resize(values.size() * 8);
  const bool swap = needs_swap(ByteOrder::Little);
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bits = static_cast<std::uint64_t>(values[i]);
    if (swap) bits = __builtin_bswap64(bits);
    std::memcpy(a.payload.data() + 8 * i, &bits, 8);
  }
  return a;
}

Array make_unicode(std::span<const std::string> values) {
  std::size_t k = 1;
  for (const auto& v : values) k = std::max(k, v.size());
  Array a;
  a.descriptor.element_type = ElementType::Unicode;
  a.descriptor.byte_order = ByteOrder::Little;
  a.descriptor.string_length = k;
  a.descriptor.shape = {values.size()};
  a.payload.assign(values.size() * 4 * k, 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t c = 0; c < values[i].size(); ++c) {
      const auto ch = static_cast<unsigned char>(values[i][c]);
      if (ch >= 0x80) throw Error(ErrorCode::InvalidArgument, "non-ASCII class name '" + values[i] + "'");
      a.payload[(i * k + c) * 4] = ch;
    }
  }
  return a;
}

}  // namespace wlc::npy
