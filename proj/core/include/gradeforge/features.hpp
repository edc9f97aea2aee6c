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
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "gradeforge/frame.hpp"

namespace gradeforge {

/// Grading-style descriptor of one frame, computed on a 256x256 bilinear
/// resample of the input:
///   [0, 512)    8x8x8 joint RGB histogram, L1-normalised, bin r + 8g + 64b
///   [512, 518)  Lab mean L, a, b then Lab population std L, a, b
///   [518, 530)  RGB means of the 2x2 spatial grid, cells TL, TR, BL, BR
struct StyleFeature {
  static constexpr std::size_t kHistBins = 512;
  static constexpr std::size_t kLabOffset = 512;
  static constexpr std::size_t kGridOffset = 518;
  static constexpr std::size_t kDim = 530;
  static constexpr int kWorkingSide = 256;

  std::vector<double> values = std::vector<double>(kDim, 0.0);

  std::span<const double> histogram() const { return {values.data(), kHistBins}; }

  friend bool operator==(const StyleFeature&, const StyleFeature&) = default;
};

/// C = reference - input, componentwise.
struct ConditionVector {
  std::vector<double> values;
  friend bool operator==(const ConditionVector&, const ConditionVector&) = default;
};

/// sRGB (D65) to CIE Lab. Companding is the IEC 61966-2-1 curve; the matrix
/// and white point are the scikit-image constants.
std::array<double, 3> srgb_to_lab(double r, double g, double b);

/// Bilinear resample with pixel-centre alignment; same-size input is copied.
Frame resize_bilinear(const Frame& frame, int width, int height);

StyleFeature extract_style_feature(const Frame& frame);

ConditionVector condition_vector(const StyleFeature& reference, const StyleFeature& input);

double feature_distance(const StyleFeature& a, const StyleFeature& b);

/// Injection point for learned extractors.
class StyleExtractor {
 public:
  virtual ~StyleExtractor() = default;
  virtual StyleFeature extract(const Frame& frame) const = 0;
};

class StatisticalStyleExtractor final : public StyleExtractor {
 public:
  StyleFeature extract(const Frame& frame) const override { return extract_style_feature(frame); }
};

// Flat little-endian float32 cache format.
std::vector<std::uint8_t> serialize_feature(const StyleFeature& feature);
StyleFeature deserialize_feature(std::span<const std::uint8_t> bytes);

}  // namespace gradeforge
