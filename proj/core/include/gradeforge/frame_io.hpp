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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "gradeforge/frame.hpp"

namespace gradeforge {

// Frames travel as 8-bit RGB PNG. Clips are directories of `%06d.png` files
// numbered from 1, plus a `clip.json` sidecar holding fps and frame count.

std::vector<std::uint8_t> encode_png(const Frame& frame);
/// Throws kIo on malformed data; alpha is dropped, grey is expanded.
Frame decode_png(std::span<const std::uint8_t> bytes);

Frame load_frame(const std::filesystem::path& path);
void save_frame(const std::filesystem::path& path, const Frame& frame);

inline constexpr const char* kClipSidecar = "clip.json";

/// Loads every file whose stem is all digits, ordered by numeric value. fps
/// comes from `fps` when given, else the sidecar, else 24.
VideoClip load_clip(const std::filesystem::path& dir, std::optional<double> fps = std::nullopt);
void save_clip(const VideoClip& clip, const std::filesystem::path& dir);

}  // namespace gradeforge
