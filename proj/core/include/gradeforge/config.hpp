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
#include <optional>
#include <string>

#include "gradeforge/trainer.hpp"

namespace gradeforge {

struct ScheduleSection {
  int steps = kDefaultDiffusionSteps;
  double beta_start = kDefaultBetaStart;
  double beta_end = kDefaultBetaEnd;
  int ddim_steps = 25;
};

/// Optimiser, architecture and synthetic-corpus settings for `train`.
struct TrainingSection {
  DenoiserConfig model;
  int batch_size = 64;
  int steps = 20000;
  double learning_rate = 1e-5;
  double weight_decay = 0.0;
  double grad_clip = 1.0;
  double cond_dropout = 0.1;
  std::uint64_t seed = 0;
  int triples = 500;
  int scenes = 40;
  int scene_size = 128;
  int frames_per_scene = 6;
  std::string corpus;    // directory of scene folders; empty = procedural scenes
  std::string loss_csv;  // empty = next to the checkpoint
};

struct CatalogSection {
  std::string dir = "data/catalog";
  double split_ratio = 0.9;
  std::uint64_t seed = 0;
  double low_confidence_threshold = 0.15;
};

struct ServerSection {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string store = "gradeforge-store";
  std::string checkpoint = "gradeforge.gfck";
  int threads = 8;
};

struct AppConfig {
  ScheduleSection schedule;
  TrainingSection training;
  CatalogSection catalog;
  ServerSection server;

  /// TrainConfig assembled from the schedule and training sections.
  TrainConfig train_config() const;
};

/// JSON with optional "schedule", "training", "catalog" and "server"
/// objects. Unknown keys are rejected so typos do not pass silently.
AppConfig parse_config(std::string_view json_text);
AppConfig load_config(const std::filesystem::path& path);

/// GRADEFORGE_STORE, GRADEFORGE_CHECKPOINT and GRADEFORGE_BIND (host:port).
void apply_env_overrides(AppConfig& config);

/// "host:port" or ":port" or "port".
void parse_bind(const std::string& bind, std::string& host, int& port);

}  // namespace gradeforge
