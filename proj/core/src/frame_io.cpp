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

#include "gradeforge/frame_io.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <string>

#include "gradeforge/error.hpp"

namespace gradeforge {
namespace fs = std::filesystem;

namespace {

struct PngImage {
  png_image image{};
  PngImage() {
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

bool is_frame_file(const fs::path& p) {
  const std::string stem = p.stem().string();
  return p.extension() == ".png" && !stem.empty() &&
         std::all_of(stem.begin(), stem.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Frame& frame) {
  if (frame.empty()) throw_invalid("encode_png: empty frame");
  const std::vector<std::uint8_t> rgb = frame.to_rgb8();
  PngImage png;
  png.image.width = static_cast<png_uint_32>(frame.width());
  png.image.height = static_cast<png_uint_32>(frame.height());
  png.image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png.image, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
    throw Error(ErrorKind::kIo, std::string("png size query failed: ") + png.image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png.image, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
    throw Error(ErrorKind::kIo, std::string("png encode failed: ") + png.image.message);
  }
  out.resize(size);
  return out;
}

Frame decode_png(std::span<const std::uint8_t> bytes) {
  PngImage png;
  if (!png_image_begin_read_from_memory(&png.image, bytes.data(), bytes.size())) {
    throw Error(ErrorKind::kIo, std::string("png decode failed: ") + png.image.message);
  }
  png.image.format = PNG_FORMAT_RGB;
  if (png.image.width == 0 || png.image.height == 0) throw Error(ErrorKind::kIo, "png has no pixels");
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(png.image));
  if (!png_image_finish_read(&png.image, nullptr, rgb.data(), 0, nullptr)) {
    throw Error(ErrorKind::kIo, std::string("png decode failed: ") + png.image.message);
  }
  return Frame::from_rgb8(static_cast<int>(png.image.width), static_cast<int>(png.image.height), rgb);
}

Frame load_frame(const fs::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return decode_png(bytes);
  } catch (const Error& e) {
    throw Error(ErrorKind::kIo, path.string() + ": " + e.what());
  }
}

void save_frame(const fs::path& path, const Frame& frame) {
  const auto bytes = encode_png(frame);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

VideoClip load_clip(const fs::path& dir, std::optional<double> fps) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::kIo, dir.string() + " is not a directory");
  std::vector<std::pair<unsigned long long, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_frame_file(entry.path())) {
      files.emplace_back(std::stoull(entry.path().stem().string()), entry.path());
    }
  }
  if (files.empty()) throw Error(ErrorKind::kIo, dir.string() + " contains no numbered .png frames");
  std::sort(files.begin(), files.end());

  VideoClip clip;
  clip.fps = 24.0;
  const fs::path sidecar = dir / kClipSidecar;
  if (fs::exists(sidecar)) {
    std::ifstream in(sidecar);
    try {
      const auto meta = nlohmann::json::parse(in);
      clip.fps = meta.at("fps").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kIo, sidecar.string() + ": " + e.what());
    }
  }
  if (fps) clip.fps = *fps;
  if (!(clip.fps > 0.0)) throw_invalid("clip fps must be positive");

  clip.frames.reserve(files.size());
  for (const auto& [num, path] : files) {
    clip.frames.push_back(load_frame(path));
    if (!clip.frames.back().same_shape(clip.frames.front())) {
      throw Error(ErrorKind::kIo, path.string() + ": dimensions differ from the first frame");
    }
  }
  return clip;
}

void save_clip(const VideoClip& clip, const fs::path& dir) {
  clip.validate();
  fs::create_directories(dir);
  // Stale frames from a longer clip would otherwise be picked up on load.
  std::vector<fs::path> stale;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_frame_file(entry.path())) stale.push_back(entry.path());
  }
  for (const auto& p : stale) fs::remove(p);
  char name[32];
  for (std::size_t i = 0; i < clip.frames.size(); ++i) {
    std::snprintf(name, sizeof name, "%06zu.png", i + 1);
    save_frame(dir / name, clip.frames[i]);
  }
  nlohmann::json meta{{"fps", clip.fps},
                      {"frame_count", clip.frames.size()},
                      {"width", clip.frames.front().width()},
                      {"height", clip.frames.front().height()}};
  std::ofstream out(dir / kClipSidecar);
  out << meta.dump(2) << "\n";
  if (!out) throw Error(ErrorKind::kIo, "cannot write clip sidecar in " + dir.string());
}

}  // namespace gradeforge
