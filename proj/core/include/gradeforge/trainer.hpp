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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gradeforge/dataset.hpp"
#include "gradeforge/denoiser.hpp"
#include "gradeforge/features.hpp"

namespace gradeforge {

struct TrainingSample {
  DeltaImage delta_image;  // target delta, raw offset units
  ConditionVector condition;
};

/// C = feature(reference) - feature(input), target = reshaped delta of the LUT.
TrainingSample make_training_sample(const GradingTriple& triple,
                                    const StyleExtractor& extractor = StatisticalStyleExtractor());

struct TrainConfig {
  DenoiserConfig model;
  int schedule_steps = kDefaultDiffusionSteps;
  double beta_start = kDefaultBetaStart;
  double beta_end = kDefaultBetaEnd;

  int batch_size = 64;
  int steps = 20000;
  double learning_rate = 1e-5;
  double weight_decay = 0.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 1.0;  // global-norm clip, 0 disables
  // Fraction of samples trained as (C = 0, target = 0) so that a zero
  // condition means "no change".
  double cond_dropout = 0.1;
  std::uint64_t seed = 0;

  std::function<void(int step, double loss)> on_step;  // optional progress hook
  // Called with the current weights every `snapshot_every` steps (0 = never).
  int snapshot_every = 0;
  std::function<void(int step, const DiffusionModel& model)> on_snapshot;

  void validate() const;
};

struct TrainResult {
  DiffusionModel model;
  std::vector<double> loss_trace;  // one batch-mean loss per step
};

/// Per-dimension RMS of the conditions; dimensions that never vary get 1.
std::vector<double> condition_scale(std::span<const TrainingSample> samples);
/// 1 / RMS over every delta raster value (1 for an all-zero set).
double delta_scale(std::span<const TrainingSample> samples);

/// Minimises the noise-prediction MSE with AdamW. Deterministic for a fixed seed.
/// A non-finite loss throws kTraining with the step, batch slot and recent
/// loss history.
TrainResult train(std::span<const TrainingSample> samples, const TrainConfig& config);

/// Same, continuing from `initial` weights.
TrainResult train(std::span<const TrainingSample> samples, const TrainConfig& config,
                  const std::vector<float>& initial);

std::string loss_csv(std::span<const double> trace);
void write_loss_csv(const std::filesystem::path& path, std::span<const double> trace);

}  // namespace gradeforge
