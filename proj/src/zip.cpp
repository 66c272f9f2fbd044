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


#include "wlc/zip.hpp"

#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <limits>

#include "wlc/error.hpp"

namespace wlc::zip {
namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint32_t kZip64EndSig = 0x06064b50;
constexpr std::uint32_t kZip64LocatorSig = 0x07064b50;
// Worst-case deflate expansion is about 1032:1.
constexpr std::uint64_t kMaxInflateRatio = 1100;

[[noreturn]] void corrupt(const std::string& what) { throw Error(ErrorCode::MalformedHeader, "zip: " + what); }

class Cursor {
 public:
  Cursor(std::span<const std::uint8_t> bytes, std::uint64_t pos) : bytes_(bytes), pos_(pos) {
    if (pos > bytes.size()) corrupt("offset beyond end of file");
  }
  std::uint64_t u(unsigned width) {
    if (width > bytes_.size() - pos_) corrupt("truncated record");
    std::uint64_t v = 0;
    for (unsigned i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += width;
    return v;
  }
  std::uint16_t u16() { return static_cast<std::uint16_t>(u(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(u(4)); }
  std::uint64_t u64() { return u(8); }
  std::span<const std::uint8_t> take(std::uint64_t n) {
    if (n > bytes_.size() - pos_) corrupt("truncated field");
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint64_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::uint64_t pos_;
};

std::vector<std::uint8_t> inflate_raw(std::span<const std::uint8_t> in, std::uint64_t expected) {
  std::vector<std::uint8_t> out(expected);
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) corrupt("inflate init failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const auto produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected) corrupt("deflate stream does not match declared size");
  return out;
}

void put(std::vector<std::uint8_t>& out, std::uint64_t v, unsigned width) {
  for (unsigned i = 0; i < width; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace

std::vector<Entry> read(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 22) throw Error(ErrorCode::BadMagic, "zip: too short for an end-of-directory record");
  // End-of-central-directory record, searched backwards past a possible comment.
  std::uint64_t eocd = std::numeric_limits<std::uint64_t>::max();
  const std::size_t lowest = bytes.size() >= 22 + 0xffff ? bytes.size() - 22 - 0xffff : 0;
  for (std::size_t p = bytes.size() - 22 + 1; p-- > lowest;) {
    if (bytes[p] == 0x50 && bytes[p + 1] == 0x4b && bytes[p + 2] == 0x05 && bytes[p + 3] == 0x06) {
      eocd = p;
      break;
    }
  }
  if (eocd == std::numeric_limits<std::uint64_t>::max()) throw Error(ErrorCode::BadMagic, "zip: no end-of-directory record");

  Cursor end(bytes, eocd + 4);
  end.u16();  // disk number
  end.u16();  // disk with central directory
  end.u16();  // entries on this disk
  std::uint64_t count = end.u16();
  std::uint64_t dir_size = end.u32();
  std::uint64_t dir_offset = end.u32();

  if ((count == 0xffff || dir_size == 0xffffffff || dir_offset == 0xffffffff) && eocd >= 20) {
    Cursor loc(bytes, eocd - 20);
    if (loc.u32() == kZip64LocatorSig) {
      loc.u32();
      const std::uint64_t z64 = loc.u64();
      Cursor z(bytes, z64);
      if (z.u32() != kZip64EndSig) corrupt("bad zip64 end record");
      z.u64();  // record size
      z.u16();
      z.u16();
      z.u32();
      z.u32();
      z.u64();
      count = z.u64();
      dir_size = z.u64();
      dir_offset = z.u64();
    }
  }
  if (dir_offset > bytes.size() || dir_size > bytes.size() - dir_offset) corrupt("central directory out of range");
  if (count > dir_size / 46) corrupt("entry count exceeds directory size");

  std::vector<Entry> entries;
  Cursor dir(bytes, dir_offset);
  for (std::uint64_t i = 0; i < count; ++i) {
    if (dir.u32() != kCentralSig) corrupt("bad central directory signature");
    dir.u16();  // version made by
    dir.u16();  // version needed
    const std::uint16_t flags = dir.u16();
    const std::uint16_t method = dir.u16();
    dir.u32();  // time/date
    const std::uint32_t crc = dir.u32();
    std::uint64_t csize = dir.u32();
    std::uint64_t usize = dir.u32();
    const std::uint16_t name_len = dir.u16();
    const std::uint16_t extra_len = dir.u16();
    const std::uint16_t comment_len = dir.u16();
    dir.u16();  // disk start
    dir.u16();  // internal attrs
    dir.u32();  // external attrs
    std::uint64_t local = dir.u32();
    auto name = dir.take(name_len);
    auto extra = dir.take(extra_len);
    dir.take(comment_len);

    Cursor ex(extra, 0);
    while (ex.pos() + 4 <= extra.size()) {
      const std::uint16_t id = ex.u16();
      const std::uint16_t len = ex.u16();
      auto field = ex.take(len);
      if (id != 0x0001) continue;
      Cursor f(field, 0);
      if (usize == 0xffffffff) usize = f.u64();
      if (csize == 0xffffffff) csize = f.u64();
      if (local == 0xffffffff) local = f.u64();
    }
    if (flags & 0x1) corrupt("encrypted members are not supported");

    Cursor lh(bytes, local);
    if (lh.u32() != kLocalSig) corrupt("bad local header signature");
    lh.take(22);
    const std::uint16_t lname = lh.u16();
    const std::uint16_t lextra = lh.u16();
    lh.take(lname);
    lh.take(lextra);
    auto raw = lh.take(csize);

    Entry e;
    e.name.assign(reinterpret_cast<const char*>(name.data()), name.size());
    if (method == 0) {
      if (csize != usize) corrupt("stored member size mismatch");
      e.data.assign(raw.begin(), raw.end());
    } else if (method == 8) {
      if (usize > csize * kMaxInflateRatio + 1024) corrupt("implausible compression ratio");
      e.data = inflate_raw(raw, usize);
    } else {
      corrupt("unsupported compression method " + std::to_string(method));
    }
    const auto actual = crc32_z(0L, e.data.data(), e.data.size());
    if (actual != crc) corrupt("CRC mismatch in member '" + e.name + "'");
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<std::uint8_t> write(std::span<const Entry> entries) {
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> dir;
  constexpr std::uint16_t kDosTime = 0;
  constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01
  for (const auto& e : entries) {
    if (e.data.size() >= 0xffffffffULL || out.size() >= 0xffffffffULL) {
      throw Error(ErrorCode::IoError, "zip: member '" + e.name + "' needs zip64, which the writer does not emit");
    }
    const auto crc = crc32_z(0L, e.data.data(), e.data.size());
    const auto offset = out.size();
    put(out, kLocalSig, 4);
    put(out, 20, 2);
    put(out, 0, 2);
    put(out, 0, 2);
    put(out, kDosTime, 2);
    put(out, kDosDate, 2);
    put(out, crc, 4);
    put(out, e.data.size(), 4);
    put(out, e.data.size(), 4);
    put(out, e.name.size(), 2);
    put(out, 0, 2);
    out.insert(out.end(), e.name.begin(), e.name.end());
    out.insert(out.end(), e.data.begin(), e.data.end());

    put(dir, kCentralSig, 4);
    put(dir, 20, 2);
    put(dir, 20, 2);
    put(dir, 0, 2);
    put(dir, 0, 2);
    put(dir, kDosTime, 2);
    put(dir, kDosDate, 2);
    put(dir, crc, 4);
    put(dir, e.data.size(), 4);
    put(dir, e.data.size(), 4);
    put(dir, e.name.size(), 2);
    put(dir, 0, 2);
    put(dir, 0, 2);
    put(dir, 0, 2);
    put(dir, 0, 2);
    put(dir, 0, 4);
    put(dir, offset, 4);
    dir.insert(dir.end(), e.name.begin(), e.name.end());
  }
  const auto dir_offset = out.size();
  out.insert(out.end(), dir.begin(), dir.end());
  put(out, kEndSig, 4);
  put(out, 0, 2);
  put(out, 0, 2);
  put(out, entries.size(), 2);
  put(out, entries.size(), 2);
  put(out, dir.size(), 4);
  put(out, dir_offset, 4);
  put(out, 0, 2);
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  if (size < 0) throw Error(ErrorCode::IoError, "cannot size '" + path.string() + "'");
  in.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  if (!in.read(reinterpret_cast<char*>(bytes.data()), size)) throw Error(ErrorCode::IoError, "short read on '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot create '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed on '" + path.string() + "'");
}

}  // namespace wlc::zip
