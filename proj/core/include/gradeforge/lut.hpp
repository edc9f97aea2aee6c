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

#include <array>
#include <span>
#include <string>
#include <vector>

#include "gradeforge/frame.hpp"

namespace gradeforge {

using Rgb = std::array<float, 3>;

/// Explicit 3D colour lattice. Entries are stored red-fastest (the `.cube`
/// data order): flat index of (r, g, b) is r + size*(g + size*b).
///
/// Entries are kept unclamped; clamping to [0,1] happens when a LUT is applied.
class Lut3D {
 public:
  Lut3D() = default;
  /// Validates size >= 2, entry count, finiteness and domain ordering.
  Lut3D(int size, std::vector<float> entries, Rgb domain_min = {0.f, 0.f, 0.f},
        Rgb domain_max = {1.f, 1.f, 1.f});

  int size() const noexcept { return size_; }
  std::size_t lattice_points() const noexcept {
    return static_cast<std::size_t>(size_) * size_ * size_;
  }
  std::span<const float> entries() const noexcept { return entries_; }
  const Rgb& domain_min() const noexcept { return domain_min_; }
  const Rgb& domain_max() const noexcept { return domain_max_; }

  std::size_t index(int r, int g, int b) const noexcept {
    return static_cast<std::size_t>(r) +
           static_cast<std::size_t>(size_) * (static_cast<std::size_t>(g) +
                                              static_cast<std::size_t>(size_) * b);
  }
  Rgb at(int r, int g, int b) const noexcept {
    const float* e = entries_.data() + 3 * index(r, g, b);
    return {e[0], e[1], e[2]};
  }

  friend bool operator==(const Lut3D&, const Lut3D&) = default;

 private:
  int size_ = 0;
  std::vector<float> entries_;
  Rgb domain_min_{0.f, 0.f, 0.f};
  Rgb domain_max_{1.f, 1.f, 1.f};
};

/// Signed offsets from the identity lattice of the same size. Held in double
/// so that delta_from / lut_from_delta round-trip bit-exactly.
struct DeltaLut {
  int size = 0;
  std::vector<double> offsets;  // size^3 * 3, red-fastest

  friend bool operator==(const DeltaLut&, const DeltaLut&) = default;
};

/// A 16^3 delta laid out as a 64x64x3 raster (row-major, interleaved RGB).
struct DeltaImage {
  static constexpr int kSide = 64;
  static constexpr int kChannels = 3;
  static constexpr std::size_t kValues = kSide * kSide * kChannels;

  std::vector<double> values = std::vector<double>(kValues, 0.0);

  friend bool operator==(const DeltaImage&, const DeltaImage&) = default;
};

inline constexpr int kDiffusionLutSize = 16;

Lut3D identity_lut(int size);
/// Entries 1 - coordinate. Handy as a non-trivial linear lattice function.
Lut3D invert_lut(int size);

/// Trilinear lookup of a single colour; input clamped to the domain, output to [0,1].
Rgb sample_lut(const Lut3D& lut, const Rgb& rgb);

Frame apply_lut(const Lut3D& lut, const Frame& frame);

/// Applies one LUT to every frame. `workers` == 0 picks the hardware
/// concurrency. Output is identical for every worker count.
VideoClip apply_lut_clip(const Lut3D& lut, const VideoClip& clip, unsigned workers = 0);

DeltaLut delta_from(const Lut3D& lut);
Lut3D lut_from_delta(const DeltaLut& delta);

/// Only 16^3 deltas reshape to 64x64; others raise kUnsupportedSize.
DeltaImage reshape_delta(const DeltaLut& delta);
DeltaLut unreshape(const DeltaImage& image);

inline constexpr float kMixClampLow = -0.25f;
inline constexpr float kMixClampHigh = 1.25f;

/// Affine combination (weights sum to 1, negatives allowed for extrapolation),
/// clamped to [kMixClampLow, kMixClampHigh].
Lut3D mix_luts(std::span<const Lut3D> luts, std::span<const double> weights);

/// Lattice of `first` pushed through `second`: result(x) = second(first(x)).
Lut3D compose_luts(const Lut3D& first, const Lut3D& second);

}  // namespace gradeforge
