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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "gradeforge/error.hpp"
#include "gradeforge/frame_io.hpp"

using namespace gradeforge;
namespace fs = std::filesystem;

namespace {

Frame random_frame(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<float> px(static_cast<std::size_t>(w) * h * 3);
  std::uniform_real_distribution<float> u(0.f, 1.f);
  for (float& v : px) v = u(rng);
  return Frame(w, h, std::move(px));
}

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / name) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

}  // namespace

TEST(Frame, Validation) {
  EXPECT_THROW(Frame(0, 4), Error);
  EXPECT_THROW(Frame(2, 2, std::vector<float>(11)), Error);
  EXPECT_THROW(Frame(1, 1, std::vector<float>{0.f, 1.5f, 0.f}), Error);
  EXPECT_THROW(Frame(1, 1, std::vector<float>{0.f, std::nanf(""), 0.f}), Error);
}

TEST(Frame, Rgb8QuantizesByRounding) {
  const Frame f(2, 1, std::vector<float>{0.f, 0.5f, 1.f, 0.2f, 0.998f, 0.001f});
  const auto rgb = f.to_rgb8();
  const std::vector<std::uint8_t> want{0, static_cast<std::uint8_t>(std::lround(0.5 * 255)), 255,
                                       static_cast<std::uint8_t>(std::lround(0.2 * 255)), 254, 0};
  EXPECT_EQ(rgb, want);
  EXPECT_EQ(Frame::from_rgb8(2, 1, rgb).to_rgb8(), rgb);
}

TEST(FrameIo, PngRoundTripIsExactOn8BitContent) {
  const Frame f = random_frame(37, 21, 3);
  const Frame q = Frame::from_rgb8(37, 21, f.to_rgb8());
  const Frame back = decode_png(encode_png(f));
  EXPECT_EQ(back, q);
}

TEST(FrameIo, GarbageIsAnIoError) {
  const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5};
  try {
    decode_png(junk);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

TEST(FrameIo, ClipRoundTripWithinQuantization) {
  TempDir dir("gradeforge_clip_rt");
  VideoClip clip;
  clip.fps = 30.0;
  for (int i = 0; i < 12; ++i) clip.frames.push_back(random_frame(16, 9, static_cast<std::uint64_t>(i)));
  save_clip(clip, dir.path());
  EXPECT_TRUE(fs::exists(dir.path() / "000001.png"));
  EXPECT_TRUE(fs::exists(dir.path() / "000012.png"));
  const VideoClip back = load_clip(dir.path());
  EXPECT_EQ(back.fps, 30.0);
  ASSERT_EQ(back.size(), clip.size());
  for (std::size_t i = 0; i < clip.size(); ++i) {
    const auto a = clip.frames[i].pixels(), b = back.frames[i].pixels();
    for (std::size_t k = 0; k < a.size(); ++k) ASSERT_LE(std::abs(a[k] - b[k]), 0.5f / 255.f + 1e-6f);
  }
  // Saving a shorter clip into the same directory must not leave old frames.
  clip.frames.resize(3);
  save_clip(clip, dir.path());
  EXPECT_EQ(load_clip(dir.path()).size(), 3u);
}

TEST(FrameIo, FramesOrderedByNumericName) {
  TempDir dir("gradeforge_clip_order");
  const Frame a = Frame::from_rgb8(1, 1, std::vector<std::uint8_t>{10, 10, 10});
  const Frame b = Frame::from_rgb8(1, 1, std::vector<std::uint8_t>{20, 20, 20});
  const Frame c = Frame::from_rgb8(1, 1, std::vector<std::uint8_t>{30, 30, 30});
  save_frame(dir.path() / "10.png", c);
  save_frame(dir.path() / "2.png", b);
  save_frame(dir.path() / "1.png", a);
  std::ofstream(dir.path() / "notes.txt") << "ignored";
  const VideoClip clip = load_clip(dir.path(), 12.0);
  ASSERT_EQ(clip.size(), 3u);
  EXPECT_EQ(clip.frames[0], a);
  EXPECT_EQ(clip.frames[1], b);
  EXPECT_EQ(clip.frames[2], c);
  EXPECT_EQ(clip.fps, 12.0);
}

TEST(FrameIo, MismatchedDimensionsAndEmptyDirectoriesFail) {
  TempDir dir("gradeforge_clip_bad");
  EXPECT_THROW(load_clip(dir.path()), Error);
  save_frame(dir.path() / "1.png", random_frame(4, 4, 1));
  save_frame(dir.path() / "2.png", random_frame(5, 4, 2));
  EXPECT_THROW(load_clip(dir.path()), Error);
  EXPECT_THROW(load_clip(dir.path() / "nope"), Error);
}
