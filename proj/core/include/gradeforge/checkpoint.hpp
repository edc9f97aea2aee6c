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
#include <span>
#include <vector>

#include "gradeforge/denoiser.hpp"

namespace gradeforge {

// Binary layout, all little-endian:
//   "GFCK" | u32 version | i32 widths[3], groups, embed_dim, time_dim, cond_dim
//   | i32 K | f64 beta_start | f64 beta_end
//   | f64 delta_scale | u64 n | f64 cond_scale[n] | u64 m | f32 weights[m]
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const DiffusionModel& model);
/// Throws kIo on a bad magic, unknown version, truncation or a weight count
/// that does not match the stored architecture.
DiffusionModel deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const DiffusionModel& model);
DiffusionModel load_checkpoint(const std::filesystem::path& path);

}  // namespace gradeforge
