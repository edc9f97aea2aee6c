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
#include <span>
#include <vector>

namespace gradeforge {

/// RGB image with interleaved 32-bit float channels in [0,1], row-major.
class Frame {
 public:
  Frame() = default;
  /// Black frame. Throws kInvalidArgument when width*height == 0.
  Frame(int width, int height);
  /// Takes ownership of width*height*3 values; validates range and finiteness.
  Frame(int width, int height, std::vector<float> pixels);

  static Frame from_rgb8(int width, int height, std::span<const std::uint8_t> rgb);
  /// Quantizes with round(v*255).
  std::vector<std::uint8_t> to_rgb8() const;

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const noexcept { return pixels_.empty(); }

  std::span<const float> pixels() const noexcept { return pixels_; }
  // Writers are expected to keep values in [0,1].
  std::span<float> mutable_pixels() noexcept { return pixels_; }

  const float* at(int x, int y) const {
    return pixels_.data() + (static_cast<std::size_t>(y) * width_ + x) * 3;
  }
  float* at(int x, int y) {
    return pixels_.data() + (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  bool same_shape(const Frame& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> pixels_;
};

struct VideoClip {
  std::vector<Frame> frames;
  double fps = 24.0;

  /// Throws kInvalidArgument unless non-empty, fps > 0 and all frames share
  /// dimensions.
  void validate() const;
  std::size_t size() const noexcept { return frames.size(); }

  friend bool operator==(const VideoClip&, const VideoClip&) = default;
};

}  // namespace gradeforge
