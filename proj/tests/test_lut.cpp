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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "gradeforge/error.hpp"
#include "gradeforge/lut.hpp"

using namespace gradeforge;

namespace {

Lut3D random_lut(int size, std::uint64_t seed, float lo = 0.f, float hi = 1.f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  std::vector<float> e(static_cast<std::size_t>(size) * size * size * 3);
  for (float& v : e) v = u(rng);
  return Lut3D(size, std::move(e));
}

// Straight textbook trilinear: weights of the 8 corners multiplied out.
std::array<double, 3> oracle(const Lut3D& lut, std::array<double, 3> c) {
  const int n = lut.size();
  double f[3];
  int i0[3], i1[3];
  for (int a = 0; a < 3; ++a) {
    const double lo = lut.domain_min()[a], hi = lut.domain_max()[a];
    const double x = (std::clamp(c[a], lo, hi) - lo) / (hi - lo) * (n - 1);
    i0[a] = std::min(static_cast<int>(std::floor(x)), n - 2);
    i1[a] = i0[a] + 1;
    f[a] = x - i0[a];
  }
  std::array<double, 3> out{0, 0, 0};
  for (int corner = 0; corner < 8; ++corner) {
    const int r = corner & 1 ? i1[0] : i0[0];
    const int g = corner & 2 ? i1[1] : i0[1];
    const int b = corner & 4 ? i1[2] : i0[2];
    const double w = (corner & 1 ? f[0] : 1 - f[0]) * (corner & 2 ? f[1] : 1 - f[1]) * (corner & 4 ? f[2] : 1 - f[2]);
    const Rgb e = lut.at(r, g, b);
    for (int a = 0; a < 3; ++a) out[a] += w * e[a];
  }
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return out;
}

}  // namespace

TEST(Lut, IdentityEntriesFollowTheDomain) {
  const Lut3D id = identity_lut(5);
  for (int b = 0; b < 5; ++b)
    for (int g = 0; g < 5; ++g)
      for (int r = 0; r < 5; ++r) {
        const Rgb e = id.at(r, g, b);
        EXPECT_FLOAT_EQ(e[0], r / 4.f);
        EXPECT_FLOAT_EQ(e[1], g / 4.f);
        EXPECT_FLOAT_EQ(e[2], b / 4.f);
      }
  // red fastest in memory
  EXPECT_FLOAT_EQ(id.entries()[3], 0.25f);
  EXPECT_FLOAT_EQ(id.entries()[3 * 5 + 1], 0.25f);
}

TEST(Lut, ConstructorRejectsBadInput) {
  EXPECT_THROW(Lut3D(1, std::vector<float>(3)), Error);
  EXPECT_THROW(Lut3D(2, std::vector<float>(23)), Error);
  std::vector<float> e(24, 0.f);
  e[5] = std::nanf("");
  EXPECT_THROW(Lut3D(2, e), Error);
  EXPECT_THROW(Lut3D(2, std::vector<float>(24), {0.5f, 0.f, 0.f}, {0.5f, 1.f, 1.f}), Error);
}

TEST(Lut, IdentityIsBytewiseNoOpOn8BitFrames) {
  std::vector<std::uint8_t> rgb(256 * 3 * 3);
  for (int i = 0; i < 256 * 3; ++i) rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = static_cast<std::uint8_t>(i % 256);
  for (int i = 0; i < 256 * 3; ++i) rgb[3 * i + (i / 256)] = static_cast<std::uint8_t>(255 - i % 256);
  const Frame f = Frame::from_rgb8(256, 3, rgb);
  for (int size : {2, 17, 33}) EXPECT_EQ(apply_lut(identity_lut(size), f).to_rgb8(), rgb) << size;
}

TEST(Lut, TrilinearMatchesOracle) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-0.2, 1.2);
  for (int t = 0; t < 200; ++t) {
    const Lut3D lut = random_lut(2 + t % 9, 100 + t, -0.1f, 1.1f);
    for (int k = 0; k < 20; ++k) {
      const std::array<double, 3> c{u(rng), u(rng), u(rng)};
      const Rgb got = sample_lut(lut, {static_cast<float>(c[0]), static_cast<float>(c[1]), static_cast<float>(c[2])});
      const auto want = oracle(lut, {static_cast<float>(c[0]), static_cast<float>(c[1]), static_cast<float>(c[2])});
      for (int a = 0; a < 3; ++a) EXPECT_NEAR(got[a], want[a], 1e-6);
    }
  }
}

TEST(Lut, CustomDomainClampsBeforeLookup) {
  const Lut3D src = random_lut(4, 3);
  const Lut3D lut(4, std::vector<float>(src.entries().begin(), src.entries().end()), {0.2f, 0.1f, 0.f},
                  {0.8f, 0.9f, 0.5f});
  const Rgb hi = sample_lut(lut, {1.f, 1.f, 1.f});
  const Rgb edge = lut.at(3, 3, 3);
  for (int a = 0; a < 3; ++a) EXPECT_NEAR(hi[a], edge[a], 1e-7);
  const Rgb mid = sample_lut(lut, {0.5f, 0.5f, 0.25f});
  const auto want = oracle(lut, {0.5f, 0.5f, 0.25f});
  for (int a = 0; a < 3; ++a) EXPECT_NEAR(mid[a], want[a], 1e-6);
}

TEST(Lut, LatticePointsReturnEntries) {
  const Lut3D lut = random_lut(9, 4);
  for (int b = 0; b < 9; b += 2)
    for (int g = 0; g < 9; g += 3)
      for (int r = 0; r < 9; ++r) {
        const Rgb got = sample_lut(lut, {r / 8.f, g / 8.f, b / 8.f});
        EXPECT_EQ(got, lut.at(r, g, b));
      }
}

TEST(Lut, ClipIsWorkerInvariantAndOrderPreserving) {
  VideoClip clip;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 7; ++i) {
    std::vector<std::uint8_t> rgb(40 * 30 * 3);
    for (auto& b : rgb) b = static_cast<std::uint8_t>(rng());
    clip.frames.push_back(Frame::from_rgb8(40, 30, rgb));
  }
  clip.frames.push_back(clip.frames[2]);
  const Lut3D lut = random_lut(17, 9);
  const VideoClip one = apply_lut_clip(lut, clip, 1);
  ASSERT_EQ(one.size(), clip.size());
  for (std::size_t i = 0; i < clip.size(); ++i) EXPECT_EQ(one.frames[i], apply_lut(lut, clip.frames[i]));
  EXPECT_EQ(one.frames[7], one.frames[2]);
  EXPECT_EQ(apply_lut_clip(lut, clip, 3), one);
  EXPECT_EQ(apply_lut_clip(lut, clip, 16), one);
}

TEST(Lut, DeltaRoundTripIsExact) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Lut3D lut = random_lut(16, s, -0.25f, 1.25f);
    const DeltaLut d = delta_from(lut);
    const Lut3D id = identity_lut(16);
    for (std::size_t i = 0; i < d.offsets.size(); ++i) {
      EXPECT_EQ(d.offsets[i], static_cast<double>(lut.entries()[i]) - id.entries()[i]);
    }
    EXPECT_EQ(lut_from_delta(d), lut);
  }
}

TEST(Lut, ReshapeIsBijective) {
  DeltaLut d{16, std::vector<double>(16 * 16 * 16 * 3)};
  for (std::size_t i = 0; i < d.offsets.size(); ++i) d.offsets[i] = static_cast<double>(i);
  const DeltaImage img = reshape_delta(d);
  // Row-major flattening of the red-fastest lattice: lattice point p is pixel p.
  for (std::size_t p = 0; p < 4096; ++p) {
    const std::size_t row = p / 64, col = p % 64;
    for (int c = 0; c < 3; ++c) EXPECT_EQ(img.values[(row * 64 + col) * 3 + c], static_cast<double>(3 * p + c));
  }
  EXPECT_EQ(unreshape(img), d);
  EXPECT_THROW(reshape_delta(DeltaLut{8, std::vector<double>(8 * 8 * 8 * 3)}), Error);
}

TEST(Lut, MixIsClampedWeightedSum) {
  const Lut3D a = random_lut(5, 1), b = random_lut(5, 2), c = random_lut(5, 3);
  const std::vector<Lut3D> luts{a, b, c};
  const std::vector<double> w{1.4, -0.6, 0.2};
  const Lut3D m = mix_luts(luts, w);
  for (std::size_t i = 0; i < m.entries().size(); ++i) {
    const double want = w[0] * a.entries()[i] + w[1] * b.entries()[i] + w[2] * c.entries()[i];
    EXPECT_NEAR(m.entries()[i], std::clamp(want, -0.25, 1.25), 1e-6);
  }
  const std::vector<Lut3D> two{a, b};
  EXPECT_THROW(mix_luts(two, std::vector<double>{0.5}), Error);
}

TEST(Lut, ComposeEvaluatesSecondAtFirstEntries) {
  const Lut3D a = random_lut(6, 11), b = random_lut(6, 12);
  EXPECT_THROW(compose_luts(a, random_lut(5, 13)), Error);
  const Lut3D ab = compose_luts(a, b);
  ASSERT_EQ(ab.size(), a.size());
  for (int bb = 0; bb < 6; ++bb)
    for (int g = 0; g < 6; ++g)
      for (int r = 0; r < 6; ++r) {
        const Rgb e = a.at(r, g, bb);
        const auto want = oracle(b, {e[0], e[1], e[2]});
        const Rgb got = ab.at(r, g, bb);
        for (int c = 0; c < 3; ++c) EXPECT_NEAR(got[c], want[c], 1e-6);
      }
  const Lut3D id = identity_lut(6);
  const Lut3D left = compose_luts(id, a), right = compose_luts(a, identity_lut(6));
  for (std::size_t i = 0; i < a.entries().size(); ++i) {
    EXPECT_NEAR(left.entries()[i], a.entries()[i], 1e-6);
    EXPECT_NEAR(right.entries()[i], a.entries()[i], 1e-6);
  }
}
