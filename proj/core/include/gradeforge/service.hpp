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
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gradeforge/denoiser.hpp"
#include "gradeforge/keyframe.hpp"
#include "gradeforge/retouch.hpp"

namespace gradeforge {

enum class SessionStatus { kCreated, kLoaded, kGraded, kError };
const char* to_string(SessionStatus status);

struct GradeResult {
  KeyFramePair key_pair;
  std::uint64_t revision = 0;
  std::vector<std::size_t> preview_indices;
};

struct ServiceOptions {
  std::filesystem::path store;
  std::filesystem::path checkpoint;  // loaded lazily on the first grade
  int ddim_steps = 25;
  double sample_hz = 1.0;
  unsigned workers = 0;  // LUT application threads for exports
};

// Session-oriented grading pipeline behind the HTTP layer.
//
// Authoritative state per session lives on disk under <store>/<id>/: the
// uploaded clips as PNG frame directories, session.json, and one binary file
// per stack LUT. Graded frames are never stored. A fresh instance pointed at
// the same store picks sessions up on first access.
//
// Calls on different sessions run concurrently; calls on one session are
// serialised by a per-session mutex.
class GradingService {
 public:
  GradingService(ServiceOptions options, std::shared_ptr<const PromptCatalog> catalog);
  ~GradingService();

  std::string create_session();
  /// Replaces the clip. Any grade is discarded and the status recomputed.
  void upload_input(const std::string& id, VideoClip clip);
  void upload_reference(const std::string& id, VideoClip clip);

  /// kConflict without both uploads, kUnavailable without a checkpoint.
  GradeResult grade(const std::string& id);
  /// kConflict unless graded; kUnmatchablePrompt leaves the state untouched.
  PromptMatch feedback(const std::string& id, const std::string& prompt);
  void undo(const std::string& id, std::size_t to_index);

  std::vector<std::uint8_t> preview_png(const std::string& id, std::size_t frame);
  std::string export_cube(const std::string& id);
  /// Tar archive of the graded clip in the save_clip layout.
  std::vector<std::uint8_t> export_clip(const std::string& id);

  /// Session state as JSON text.
  std::string describe(const std::string& id);
  SessionStatus status(const std::string& id);

  bool has_model();
  const PromptCatalog& catalog() const { return *catalog_; }

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id);
  std::shared_ptr<const DiffusionModel> model();
  void persist(const Session& s) const;
  void load_clips(Session& s) const;

  ServiceOptions options_;
  std::shared_ptr<const PromptCatalog> catalog_;
  std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex model_mu_;
  std::shared_ptr<const DiffusionModel> model_;
};

/// Plain HTTP front end. Runs on its own thread pool until stop().
class HttpServer {
 public:
  explicit HttpServer(GradingService& service, int threads = 8);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and returns the port (an ephemeral one when `port` is 0).
  int bind(const std::string& host, int port);
  /// Blocks serving requests until stop().
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Minimal POSIX ustar archive of regular files.
struct TarEntry {
  std::string name;
  std::vector<std::uint8_t> data;
};
std::vector<std::uint8_t> make_tar(const std::vector<TarEntry>& entries);
/// Reads archives written by make_tar (regular files only).
std::vector<TarEntry> read_tar(std::span<const std::uint8_t> bytes);

}  // namespace gradeforge
