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

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "gradeforge/lut.hpp"

namespace gradeforge {

struct CubeFile {
  Lut3D lut;
  std::string title;
};

// Accepted grammar: optional `TITLE "..."`, required `LUT_3D_SIZE n`
// (2 <= n <= 256), optional `DOMAIN_MIN r g b` / `DOMAIN_MAX r g b`, `#`
// comments and blank lines anywhere, then exactly n^3 data lines of three
// numbers with red varying fastest. Keywords must precede the data block.
// Errors are ParseError carrying the 1-based line number.
CubeFile parse_cube_file(std::string_view text);
Lut3D parse_cube(std::string_view text);

/// LF line endings, 6 decimal places. DOMAIN lines are only emitted when the
/// domain differs from [0,1].
std::string write_cube(const Lut3D& lut, std::string_view title = {});

Lut3D read_cube(const std::filesystem::path& path);
void save_cube(const std::filesystem::path& path, const Lut3D& lut, std::string_view title = {});

}  // namespace gradeforge
