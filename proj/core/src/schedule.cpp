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

#include <cmath>
#include <random>

#include "gradeforge/diffusion.hpp"
#include "gradeforge/error.hpp"

namespace gradeforge {

NoiseSchedule make_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw_invalid("make_schedule: K must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw_invalid("make_schedule: need 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule s;
  s.steps = steps;
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  s.betas.resize(static_cast<std::size_t>(steps));
  s.alphas.resize(s.betas.size());
  s.alpha_bars.resize(s.betas.size());
  double prod = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double t = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    const double beta = beta_start + (beta_end - beta_start) * t;
    s.betas[i] = beta;
    s.alphas[i] = 1.0 - beta;
    prod *= s.alphas[i];
    s.alpha_bars[i] = prod;
  }
  return s;
}

DeltaImage forward_diffuse(const DeltaImage& x0, int k, const DeltaImage& eps, const NoiseSchedule& sched) {
  if (k < 1 || k > sched.steps) {
    throw_invalid("forward_diffuse: step " + std::to_string(k) + " outside [1," +
                  std::to_string(sched.steps) + "]");
  }
  if (x0.values.size() != DeltaImage::kValues || eps.values.size() != DeltaImage::kValues) {
    throw_invalid("forward_diffuse: shape mismatch");
  }
  const double a = std::sqrt(sched.alpha_bar(k));
  const double b = std::sqrt(1.0 - sched.alpha_bar(k));
  DeltaImage out;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = a * x0.values[i] + b * eps.values[i];
  return out;
}

DeltaImage gaussian_image(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  DeltaImage img;
  for (double& v : img.values) v = n(rng);
  return img;
}

std::vector<int> ddim_timesteps(int K, int steps) {
  if (steps < 1 || steps > K) throw_invalid("ddim: steps must be in [1, K]");
  std::vector<int> t(static_cast<std::size_t>(steps));
  for (int i = 1; i <= steps; ++i) {
    t[i - 1] = static_cast<int>(static_cast<long long>(i) * K / steps);
  }
  return t;
}

DeltaImage ddim_sample_from(const DeltaImage& initial, const NoisePredictor& predict,
                            const NoiseSchedule& sched, int steps) {
  if (initial.values.size() != DeltaImage::kValues) throw_invalid("ddim: bad initial raster");
  const std::vector<int> ts = ddim_timesteps(sched.steps, steps);
  DeltaImage x = initial;
  for (std::size_t i = ts.size(); i-- > 0;) {
    const int t = ts[i];
    const double ab = sched.alpha_bar(t);
    const double ab_prev = i == 0 ? 1.0 : sched.alpha_bar(ts[i - 1]);
    const DeltaImage eps = predict(x, t);
    if (eps.values.size() != DeltaImage::kValues) throw_invalid("ddim: predictor returned a bad raster");
    const double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
    const double pa = std::sqrt(ab_prev), pb = std::sqrt(1.0 - ab_prev);
    for (std::size_t j = 0; j < x.values.size(); ++j) {
      const double x0 = (x.values[j] - sb * eps.values[j]) / sa;
      x.values[j] = pa * x0 + pb * eps.values[j];
    }
  }
  return x;
}

DeltaImage ddim_sample(const NoisePredictor& predict, const NoiseSchedule& sched, int steps,
                       std::uint64_t seed) {
  return ddim_sample_from(gaussian_image(seed), predict, sched, steps);
}

}  // namespace gradeforge
