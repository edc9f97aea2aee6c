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

#include "gradeforge/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "gradeforge/error.hpp"

namespace gradeforge {
namespace {

constexpr double kWhiteX = 0.95047;
constexpr double kWhiteY = 1.0;
constexpr double kWhiteZ = 1.08883;

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double kEps = 0.008856;
  return t > kEps ? std::cbrt(t) : 7.787 * t + 16.0 / 116.0;
}

// Neumaier summation; keeps the mean of a constant block exact.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace

std::array<double, 3> srgb_to_lab(double r, double g, double b) {
  const double rl = srgb_to_linear(r);
  const double gl = srgb_to_linear(g);
  const double bl = srgb_to_linear(b);
  const double x = 0.412453 * rl + 0.357580 * gl + 0.180423 * bl;
  const double y = 0.212671 * rl + 0.715160 * gl + 0.072169 * bl;
  const double z = 0.019334 * rl + 0.119193 * gl + 0.950227 * bl;
  const double fx = lab_f(x / kWhiteX);
  const double fy = lab_f(y / kWhiteY);
  const double fz = lab_f(z / kWhiteZ);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

Frame resize_bilinear(const Frame& frame, int width, int height) {
  if (frame.empty()) throw_invalid("resize_bilinear: empty frame");
  if (frame.width() == width && frame.height() == height) return frame;
  Frame out(width, height);
  const double sx = static_cast<double>(frame.width()) / width;
  const double sy = static_cast<double>(frame.height()) / height;
  const int max_x = frame.width() - 1;
  const int max_y = frame.height() - 1;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(max_y));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, max_y);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(max_x));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, max_x);
      const double wx = fx - x0;
      const float* p00 = frame.at(x0, y0);
      const float* p10 = frame.at(x1, y0);
      const float* p01 = frame.at(x0, y1);
      const float* p11 = frame.at(x1, y1);
      float* o = out.at(x, y);
      for (int c = 0; c < 3; ++c) {
        const double top = p00[c] * (1.0 - wx) + p10[c] * wx;
        const double bot = p01[c] * (1.0 - wx) + p11[c] * wx;
        o[c] = static_cast<float>(std::clamp(top * (1.0 - wy) + bot * wy, 0.0, 1.0));
      }
    }
  }
  return out;
}

StyleFeature extract_style_feature(const Frame& input) {
  constexpr int kSide = StyleFeature::kWorkingSide;
  const Frame frame = resize_bilinear(input, kSide, kSide);
  const std::size_t n = frame.pixel_count();

  StyleFeature feat;
  std::vector<std::uint32_t> counts(StyleFeature::kHistBins, 0);
  std::vector<double> lab(n * 3);
  CompensatedSum lab_sum[3];
  CompensatedSum grid_sum[4][3];
  const int half = kSide / 2;

  for (int y = 0; y < kSide; ++y) {
    for (int x = 0; x < kSide; ++x) {
      const float* p = frame.at(x, y);
      int bin[3];
      for (int c = 0; c < 3; ++c) bin[c] = std::min(static_cast<int>(p[c] * 8.0f), 7);
      ++counts[bin[0] + 8 * bin[1] + 64 * bin[2]];

      const std::size_t i = static_cast<std::size_t>(y) * kSide + x;
      const auto v = srgb_to_lab(p[0], p[1], p[2]);
      for (int c = 0; c < 3; ++c) {
        lab[3 * i + c] = v[c];
        lab_sum[c].add(v[c]);
      }
      const int cell = (y >= half ? 2 : 0) + (x >= half ? 1 : 0);
      for (int c = 0; c < 3; ++c) grid_sum[cell][c].add(p[c]);
    }
  }

  for (std::size_t b = 0; b < counts.size(); ++b) {
    feat.values[b] = static_cast<double>(counts[b]) / static_cast<double>(n);
  }
  double mean[3];
  for (int c = 0; c < 3; ++c) mean[c] = lab_sum[c].value() / static_cast<double>(n);
  CompensatedSum sq[3];
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      const double d = lab[3 * i + c] - mean[c];
      sq[c].add(d * d);
    }
  }
  for (int c = 0; c < 3; ++c) {
    feat.values[StyleFeature::kLabOffset + c] = mean[c];
    feat.values[StyleFeature::kLabOffset + 3 + c] = std::sqrt(sq[c].value() / static_cast<double>(n));
  }
  const double cell_pixels = static_cast<double>(half) * half;
  for (int cell = 0; cell < 4; ++cell) {
    for (int c = 0; c < 3; ++c) {
      feat.values[StyleFeature::kGridOffset + 3 * cell + c] = grid_sum[cell][c].value() / cell_pixels;
    }
  }
  return feat;
}

ConditionVector condition_vector(const StyleFeature& reference, const StyleFeature& input) {
  if (reference.values.size() != input.values.size()) {
    throw_invalid("condition_vector: feature dimensions differ");
  }
  ConditionVector c;
  c.values.resize(reference.values.size());
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    c.values[i] = reference.values[i] - input.values[i];
  }
  return c;
}

double feature_distance(const StyleFeature& a, const StyleFeature& b) {
  if (a.values.size() != b.values.size()) throw_invalid("feature_distance: dimensions differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<std::uint8_t> serialize_feature(const StyleFeature& feature) {
  std::vector<std::uint8_t> out(feature.values.size() * 4);
  for (std::size_t i = 0; i < feature.values.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(feature.values[i]));
    for (int k = 0; k < 4; ++k) out[4 * i + k] = static_cast<std::uint8_t>(bits >> (8 * k));
  }
  return out;
}

StyleFeature deserialize_feature(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != StyleFeature::kDim * 4) throw_invalid("deserialize_feature: wrong byte count");
  StyleFeature f;
  for (std::size_t i = 0; i < StyleFeature::kDim; ++i) {
    std::uint32_t bits = 0;
    for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(bytes[4 * i + k]) << (8 * k);
    f.values[i] = std::bit_cast<float>(bits);
  }
  return f;
}

}  // namespace gradeforge
