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

#include <string>
#include <vector>

#include "gradeforge/frame.hpp"

namespace gradeforge {

inline constexpr double kPsnrCapDb = 99.0;

/// 10*log10(1/MSE) over all channels; identical frames give kPsnrCapDb.
double psnr(const Frame& a, const Frame& b);

/// Luma weights (Rec.709 by default) used by ssim and blur_metric.
struct LumaWeights {
  double r = 0.2126;
  double g = 0.7152;
  double b = 0.0722;
};

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
  LumaWeights luma{};
};

/// Single-scale SSIM on luma, Gaussian window, mean over valid window positions.
double ssim(const Frame& a, const Frame& b, const SsimOptions& options = {});

/// No-reference blur estimate in [0,1], higher = blurrier. Compares neighbour
/// differences before and after a 9-tap box filter in each direction and
/// returns the larger directional degradation.
double blur_metric(const Frame& frame, const LumaWeights& luma = {});

std::vector<double> luma_plane(const Frame& frame, const LumaWeights& luma = {});

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;
};

struct ClipReport {
  std::vector<double> psnr;
  std::vector<double> ssim;
  std::vector<double> blur;
  MetricSummary psnr_summary;
  MetricSummary ssim_summary;
  MetricSummary blur_summary;
  double elapsed_seconds = 0.0;

  /// Per-frame rows; lpips/brisque columns are reserved and left empty.
  std::string to_csv() const;
  /// Structured summary record (JSON text).
  std::string summary_json() const;
};

/// Population mean/stddev with compensated summation.
MetricSummary summarize(const std::vector<double>& values);

ClipReport evaluate_clip(const VideoClip& output, const VideoClip& ground_truth,
                         double elapsed_seconds);

}  // namespace gradeforge
