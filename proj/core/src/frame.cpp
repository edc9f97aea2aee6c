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

#include "gradeforge/frame.hpp"

#include <cmath>
#include <string>

#include "gradeforge/error.hpp"

namespace gradeforge {

Frame::Frame(int width, int height) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw_invalid("frame dimensions must be positive");
  pixels_.assign(pixel_count() * 3, 0.f);
}

Frame::Frame(int width, int height, std::vector<float> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width <= 0 || height <= 0) throw_invalid("frame dimensions must be positive");
  if (pixels_.size() != pixel_count() * 3) {
    throw_invalid("frame needs " + std::to_string(pixel_count() * 3) + " values, got " +
                  std::to_string(pixels_.size()));
  }
  for (float v : pixels_) {
    if (!(v >= 0.f && v <= 1.f)) throw_invalid("frame values must be finite and within [0,1]");
  }
}

Frame Frame::from_rgb8(int width, int height, std::span<const std::uint8_t> rgb) {
  Frame f(width, height);
  if (rgb.size() != f.pixels_.size()) throw_invalid("from_rgb8: buffer size mismatch");
  for (std::size_t i = 0; i < rgb.size(); ++i) f.pixels_[i] = rgb[i] / 255.0f;
  return f;
}

std::vector<std::uint8_t> Frame::to_rgb8() const {
  std::vector<std::uint8_t> out(pixels_.size());
  for (std::size_t i = 0; i < pixels_.size(); ++i) {
    float v = pixels_[i] < 0.f ? 0.f : (pixels_[i] > 1.f ? 1.f : pixels_[i]);
    out[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  return out;
}

void VideoClip::validate() const {
  if (frames.empty()) throw_invalid("clip has no frames");
  if (!(fps > 0.0) || !std::isfinite(fps)) throw_invalid("clip fps must be positive");
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (!frames[i].same_shape(frames[0])) {
      throw_invalid("clip frame " + std::to_string(i) + " has different dimensions");
    }
  }
}

}  // namespace gradeforge
