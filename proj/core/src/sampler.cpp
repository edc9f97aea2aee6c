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

#include <algorithm>

#include "gradeforge/denoiser.hpp"
#include "gradeforge/error.hpp"

namespace gradeforge {

DeltaImage ddim_sample(const ConditionVector& cond, const DiffusionModel& model, int steps, std::uint64_t seed) {
  const Denoiser<float> net(model.params.config);
  const std::vector<float> c = normalize_condition(cond, model.params.cond_scale);
  auto ws = net.make_workspace();
  std::vector<float> x(DeltaImage::kValues), out(DeltaImage::kValues);
  const NoisePredictor predict = [&](const DeltaImage& xk, int k) {
    std::copy(xk.values.begin(), xk.values.end(), x.begin());
    net.predict(model.params.weights, x.data(), c.data(), k, out.data(), *ws);
    DeltaImage eps;
    std::copy(out.begin(), out.end(), eps.values.begin());
    return eps;
  };
  DeltaImage result = ddim_sample(predict, model.schedule, steps, seed);
  const double inv = 1.0 / model.params.delta_scale;
  for (double& v : result.values) v *= inv;
  return result;
}

Lut3D generate_lut_from_condition(const ConditionVector& cond, const DiffusionModel& model, std::uint64_t seed,
                                  int steps) {
  return lut_from_delta(unreshape(ddim_sample(cond, model, steps, seed)));
}

Lut3D generate_lut(const Frame& input_key, const Frame& reference_key, const DiffusionModel& model,
                   std::uint64_t seed, int steps, const StyleExtractor& extractor) {
  const ConditionVector c = condition_vector(extractor.extract(reference_key), extractor.extract(input_key));
  return generate_lut_from_condition(c, model, seed, steps);
}

}  // namespace gradeforge
