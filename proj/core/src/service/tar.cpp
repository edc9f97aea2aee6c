/*
 * Copyright (C) 2026 The GradeForge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cstdio>
#include <cstring>

#include "gradeforge/error.hpp"
#include "gradeforge/service.hpp"

namespace gradeforge {

namespace {

constexpr std::size_t kBlock = 512;

void put_octal(std::uint8_t* field, std::size_t width, std::uint64_t value) {
  // width includes the trailing NUL
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*llo", static_cast<int>(width - 1), static_cast<unsigned long long>(value));
  std::memcpy(field, buf, width - 1);
  field[width - 1] = 0;
}

std::uint64_t get_octal(const std::uint8_t* field, std::size_t width) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width && field[i] != 0 && field[i] != ' '; ++i) {
    if (field[i] < '0' || field[i] > '7') throw Error(ErrorKind::kIo, "tar: bad octal field");
    v = v * 8 + (field[i] - '0');
  }
  return v;
}

std::uint32_t header_checksum(const std::uint8_t* h) {
  std::uint32_t sum = 0;
  for (std::size_t i = 0; i < kBlock; ++i) sum += (i >= 148 && i < 156) ? ' ' : h[i];
  return sum;
}

}  // namespace

std::vector<std::uint8_t> make_tar(const std::vector<TarEntry>& entries) {
  std::vector<std::uint8_t> out;
  for (const auto& e : entries) {
    if (e.name.empty() || e.name.size() > 99) throw_invalid("tar entry name must be 1..99 bytes: '" + e.name + "'");
    std::uint8_t h[kBlock] = {};
    std::memcpy(h, e.name.data(), e.name.size());
    put_octal(h + 100, 8, 0644);
    put_octal(h + 108, 8, 0);
    put_octal(h + 116, 8, 0);
    put_octal(h + 124, 12, e.data.size());
    put_octal(h + 136, 12, 0);  // fixed mtime keeps archives reproducible
    h[156] = '0';
    std::memcpy(h + 257, "ustar", 6);
    std::memcpy(h + 263, "00", 2);
    char sum[8];
    std::snprintf(sum, sizeof sum, "%06o", header_checksum(h));
    std::memcpy(h + 148, sum, 7);
    h[155] = ' ';
    out.insert(out.end(), h, h + kBlock);
    out.insert(out.end(), e.data.begin(), e.data.end());
    out.resize(out.size() + (kBlock - e.data.size() % kBlock) % kBlock, 0);
  }
  out.resize(out.size() + 2 * kBlock, 0);
  return out;
}

std::vector<TarEntry> read_tar(std::span<const std::uint8_t> bytes) {
  std::vector<TarEntry> entries;
  std::size_t pos = 0;
  while (pos + kBlock <= bytes.size()) {
    const std::uint8_t* h = bytes.data() + pos;
    if (std::all_of(h, h + kBlock, [](std::uint8_t b) { return b == 0; })) return entries;
    if (get_octal(h + 148, 8) != header_checksum(h)) throw Error(ErrorKind::kIo, "tar: header checksum mismatch");
    const std::size_t size = get_octal(h + 124, 12);
    pos += kBlock;
    if (size > bytes.size() - pos) throw Error(ErrorKind::kIo, "tar: entry data truncated");
    const char type = static_cast<char>(h[156]);
    if (type == '0' || type == '\0') {
      TarEntry e;
      const auto* name = reinterpret_cast<const char*>(h);
      e.name.assign(name, strnlen(name, 100));
      if (std::memcmp(h + 257, "ustar", 5) == 0 && h[345] != 0) {
        const auto* prefix = reinterpret_cast<const char*>(h + 345);
        e.name = std::string(prefix, strnlen(prefix, 155)) + "/" + e.name;
      }
      e.data.assign(bytes.begin() + pos, bytes.begin() + pos + size);
      entries.push_back(std::move(e));
    } else if (type != '5') {
      throw Error(ErrorKind::kIo, std::string("tar: unsupported entry type '") + type + "'");
    }
    pos += (size + kBlock - 1) / kBlock * kBlock;
  }
  throw Error(ErrorKind::kIo, "tar: missing end-of-archive marker");
}

}  // namespace gradeforge
