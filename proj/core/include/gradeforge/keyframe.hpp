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

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "gradeforge/frame.hpp"

namespace gradeforge {

using FrameEmbedder = std::function<std::vector<double>(const Frame&)>;

struct KeyFramePair {
  std::size_t input_index = 0;      // 0-based frame index into the input clip
  std::size_t reference_index = 0;  // 0-based frame index into the reference clip
  double similarity = 0.0;

  friend bool operator==(const KeyFramePair&, const KeyFramePair&) = default;
};

/// Frame indices round(i * fps / sample_hz), i = 0, 1, ... below frame_count,
/// deduplicated. Always contains 0.
std::vector<std::size_t> sample_indices(std::size_t frame_count, double fps, double sample_hz);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct GridArgmax {
  std::size_t row = 0;
  std::size_t col = 0;
  double similarity = 0.0;
};

/// Argmax of cosine over every (row, col) pair; ties go to the smallest row,
/// then the smallest col. Vectors must be nonzero and share one length.
GridArgmax argmax_cosine(std::span<const std::vector<double>> rows,
                         std::span<const std::vector<double>> cols);

/// Samples both clips at `sample_hz`, embeds the sampled frames and returns
/// the most similar (input, reference) pair. A zero-norm embedding raises
/// kDegenerateEmbedding naming the clip and frame.
KeyFramePair select_key_frames(const VideoClip& input, const VideoClip& reference,
                               const FrameEmbedder& embed, double sample_hz = 1.0);

}  // namespace gradeforge
