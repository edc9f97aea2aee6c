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
#include <functional>
#include <span>
#include <vector>

#include "gradeforge/lut.hpp"

namespace gradeforge {

/// Linear-beta DDPM schedule. Step k runs 1..K; index k-1 into the arrays.
struct NoiseSchedule {
  int steps = 0;  // K
  double beta_start = 0.0;
  double beta_end = 0.0;
  std::vector<double> betas;
  std::vector<double> alphas;
  std::vector<double> alpha_bars;

  double alpha_bar(int k) const { return alpha_bars.at(static_cast<std::size_t>(k - 1)); }
};

inline constexpr int kDefaultDiffusionSteps = 1000;
inline constexpr double kDefaultBetaStart = 1e-4;
inline constexpr double kDefaultBetaEnd = 0.02;

/// K == 1 uses beta_start alone.
NoiseSchedule make_schedule(int steps = kDefaultDiffusionSteps, double beta_start = kDefaultBetaStart,
                            double beta_end = kDefaultBetaEnd);

/// sqrt(abar_k) * x0 + sqrt(1 - abar_k) * eps.
DeltaImage forward_diffuse(const DeltaImage& x0, int k, const DeltaImage& eps, const NoiseSchedule& sched);

/// Unit-Gaussian raster from a seed.
DeltaImage gaussian_image(std::uint64_t seed);

/// t_i = floor(i * K / S) for i = 1..S, ascending.
std::vector<int> ddim_timesteps(int K, int steps);

/// eps-prediction callback: (x_k, k) -> predicted noise.
using NoisePredictor = std::function<DeltaImage(const DeltaImage& xk, int k)>;

/// Deterministic DDIM (eta = 0) from x_K = `initial` down the timestep subset.
DeltaImage ddim_sample_from(const DeltaImage& initial, const NoisePredictor& predict,
                            const NoiseSchedule& sched, int steps = 25);

/// Same, starting from gaussian_image(seed).
DeltaImage ddim_sample(const NoisePredictor& predict, const NoiseSchedule& sched, int steps = 25,
                       std::uint64_t seed = 0);

}  // namespace gradeforge
