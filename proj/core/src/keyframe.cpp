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

#include "gradeforge/keyframe.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gradeforge/error.hpp"

namespace gradeforge {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<std::vector<double>> embed_all(const VideoClip& clip, std::span<const std::size_t> idx,
                                           const FrameEmbedder& embed, const char* which) {
  std::vector<std::vector<double>> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) {
    out.push_back(embed(clip.frames[i]));
    if (dot(out.back(), out.back()) == 0.0) {
      throw Error(ErrorKind::kDegenerateEmbedding,
                  std::string(which) + " frame " + std::to_string(i) + " has a zero-norm embedding");
    }
  }
  return out;
}

}  // namespace

std::vector<std::size_t> sample_indices(std::size_t frame_count, double fps, double sample_hz) {
  if (frame_count == 0) throw_invalid("sample_indices: empty clip");
  if (!(fps > 0.0) || !(sample_hz > 0.0)) throw_invalid("sample_indices: rates must be positive");
  const double stride = fps / sample_hz;
  std::vector<std::size_t> out;
  for (std::size_t i = 0;; ++i) {
    const double pos = std::round(static_cast<double>(i) * stride);
    if (pos >= static_cast<double>(frame_count)) break;
    const auto idx = static_cast<std::size_t>(pos);
    if (out.empty() || out.back() != idx) out.push_back(idx);
  }
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw_invalid("cosine_similarity: length mismatch");
  const double na = dot(a, a);
  const double nb = dot(b, b);
  if (na == 0.0 || nb == 0.0) {
    throw Error(ErrorKind::kDegenerateEmbedding, "cosine_similarity: zero-norm vector");
  }
  // sqrt(na*nb) keeps cos(v, v) at exactly 1.
  return std::clamp(dot(a, b) / std::sqrt(na * nb), -1.0, 1.0);
}

GridArgmax argmax_cosine(std::span<const std::vector<double>> rows,
                         std::span<const std::vector<double>> cols) {
  if (rows.empty() || cols.empty()) throw_invalid("argmax_cosine: empty candidate set");
  GridArgmax best;
  bool first = true;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const double s = cosine_similarity(rows[r], cols[c]);
      if (first || s > best.similarity) {
        best = {r, c, s};
        first = false;
      }
    }
  }
  return best;
}

KeyFramePair select_key_frames(const VideoClip& input, const VideoClip& reference,
                               const FrameEmbedder& embed, double sample_hz) {
  if (input.frames.empty() || reference.frames.empty()) {
    throw_invalid("select_key_frames: both clips need at least one frame");
  }
  const auto in_idx = sample_indices(input.frames.size(), input.fps, sample_hz);
  const auto ref_idx = sample_indices(reference.frames.size(), reference.fps, sample_hz);
  const auto in_emb = embed_all(input, in_idx, embed, "input");
  const auto ref_emb = embed_all(reference, ref_idx, embed, "reference");
  const std::size_t dim = in_emb.front().size();
  for (const auto& e : in_emb)
    if (e.size() != dim) throw_invalid("select_key_frames: embedding lengths differ");
  for (const auto& e : ref_emb)
    if (e.size() != dim) throw_invalid("select_key_frames: embedding lengths differ");

  const GridArgmax best = argmax_cosine(in_emb, ref_emb);
  return {in_idx[best.row], ref_idx[best.col], best.similarity};
}

}  // namespace gradeforge
