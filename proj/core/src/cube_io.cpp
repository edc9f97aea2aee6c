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

#include "gradeforge/cube_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

#include "gradeforge/error.hpp"

namespace gradeforge {
namespace {

constexpr int kMinSize = 2;
constexpr int kMaxSize = 256;

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

float parse_float(std::string_view tok, std::size_t line) {
  float v = 0.f;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && tok.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(line, "non-numeric token '" + std::string(tok) + "'");
  }
  if (!std::isfinite(v)) throw ParseError(line, "non-finite value '" + std::string(tok) + "'");
  return v;
}

Rgb parse_triple(const std::vector<std::string_view>& toks, std::size_t first, std::size_t line,
                 const char* what) {
  if (toks.size() != first + 3) {
    throw ParseError(line, std::string(what) + " expects 3 values, got " +
                               std::to_string(toks.size() - first));
  }
  return {parse_float(toks[first], line), parse_float(toks[first + 1], line),
          parse_float(toks[first + 2], line)};
}

bool starts_numeric(std::string_view tok) {
  const char c = tok.front();
  return (c >= '0' && c <= '9') || c == '-' || c == '+' || c == '.';
}

}  // namespace

CubeFile parse_cube_file(std::string_view text) {
  std::optional<int> size;
  std::string title;
  Rgb dmin{0.f, 0.f, 0.f};
  Rgb dmax{1.f, 1.f, 1.f};
  std::size_t domain_line = 0;
  std::vector<float> data;
  std::size_t expected = 0;
  bool in_data = false;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view raw = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') {
      if (nl == text.size()) break;
      continue;
    }

    const auto toks = split_ws(line);
    const std::string_view key = toks.front();

    if (starts_numeric(key)) {
      if (!size) throw ParseError(line_no, "data before LUT_3D_SIZE");
      in_data = true;
      if (toks.size() != 3) {
        throw ParseError(line_no, "data line needs 3 values, got " + std::to_string(toks.size()));
      }
      if (data.size() >= expected) {
        throw ParseError(line_no, "more than " + std::to_string(expected / 3) + " data lines");
      }
      for (const auto& t : toks) data.push_back(parse_float(t, line_no));
    } else {
      if (in_data) throw ParseError(line_no, "keyword '" + std::string(key) + "' after data");
      if (key == "TITLE") {
        std::string_view rest = trim(line.substr(5));
        if (rest.size() >= 2 && rest.front() == '"' && rest.back() == '"') {
          rest = rest.substr(1, rest.size() - 2);
        }
        title = std::string(rest);
      } else if (key == "LUT_3D_SIZE") {
        if (size) throw ParseError(line_no, "duplicate LUT_3D_SIZE");
        if (toks.size() != 2) throw ParseError(line_no, "LUT_3D_SIZE expects one integer");
        int n = 0;
        auto [ptr, ec] = std::from_chars(toks[1].data(), toks[1].data() + toks[1].size(), n);
        if (ec != std::errc() || ptr != toks[1].data() + toks[1].size()) {
          throw ParseError(line_no, "non-numeric token '" + std::string(toks[1]) + "'");
        }
        if (n < kMinSize || n > kMaxSize) {
          throw ParseError(line_no, "LUT_3D_SIZE " + std::to_string(n) + " outside [2,256]");
        }
        size = n;
        expected = static_cast<std::size_t>(n) * n * n * 3;
        data.reserve(expected);
      } else if (key == "DOMAIN_MIN") {
        dmin = parse_triple(toks, 1, line_no, "DOMAIN_MIN");
        domain_line = line_no;
      } else if (key == "DOMAIN_MAX") {
        dmax = parse_triple(toks, 1, line_no, "DOMAIN_MAX");
        domain_line = line_no;
      } else if (key == "LUT_3D_INPUT_RANGE") {
        if (toks.size() != 3) throw ParseError(line_no, "LUT_3D_INPUT_RANGE expects 2 values");
        const float lo = parse_float(toks[1], line_no);
        const float hi = parse_float(toks[2], line_no);
        dmin = {lo, lo, lo};
        dmax = {hi, hi, hi};
        domain_line = line_no;
      } else if (key == "LUT_1D_SIZE" || key == "LUT_1D_INPUT_RANGE") {
        throw ParseError(line_no, "1D LUT sections are not supported");
      } else {
        throw ParseError(line_no, "unknown keyword '" + std::string(key) + "'");
      }
    }
    if (nl == text.size()) break;
  }

  if (!size) throw ParseError(line_no, "missing LUT_3D_SIZE");
  if (data.size() != expected) {
    throw ParseError(line_no, "expected " + std::to_string(expected / 3) + " data lines, got " +
                                  std::to_string(data.size() / 3));
  }
  for (int c = 0; c < 3; ++c) {
    if (!(dmin[c] < dmax[c])) throw ParseError(domain_line, "DOMAIN_MIN must be below DOMAIN_MAX");
  }
  return CubeFile{Lut3D(*size, std::move(data), dmin, dmax), std::move(title)};
}

Lut3D parse_cube(std::string_view text) { return parse_cube_file(text).lut; }

std::string write_cube(const Lut3D& lut, std::string_view title) {
  std::string out;
  out.reserve(lut.entries().size() * 10 + 128);
  if (!title.empty()) {
    out += "TITLE \"";
    out += title;
    out += "\"\n";
  }
  out += "LUT_3D_SIZE " + std::to_string(lut.size()) + "\n";
  char buf[128];
  const bool unit = lut.domain_min() == Rgb{0.f, 0.f, 0.f} && lut.domain_max() == Rgb{1.f, 1.f, 1.f};
  if (!unit) {
    std::snprintf(buf, sizeof buf, "DOMAIN_MIN %.6f %.6f %.6f\n", lut.domain_min()[0],
                  lut.domain_min()[1], lut.domain_min()[2]);
    out += buf;
    std::snprintf(buf, sizeof buf, "DOMAIN_MAX %.6f %.6f %.6f\n", lut.domain_max()[0],
                  lut.domain_max()[1], lut.domain_max()[2]);
    out += buf;
  }
  const auto e = lut.entries();
  for (std::size_t i = 0; i < e.size(); i += 3) {
    std::snprintf(buf, sizeof buf, "%.6f %.6f %.6f\n", e[i], e[i + 1], e[i + 2]);
    out += buf;
  }
  return out;
}

Lut3D read_cube(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_cube(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.filename().string() + ": " + e.detail());
  }
}

void save_cube(const std::filesystem::path& path, const Lut3D& lut, std::string_view title) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  const std::string text = write_cube(lut, title);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

}  // namespace gradeforge
