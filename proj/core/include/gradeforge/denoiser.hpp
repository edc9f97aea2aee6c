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

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gradeforge/diffusion.hpp"
#include "gradeforge/features.hpp"
#include "gradeforge/lut.hpp"

namespace gradeforge {

// Noise-prediction network over the 64x64 delta raster.
//
// Input is 6 channels: the noisy delta x_k and the reshaped identity lattice.
// Three encoder stages at 64, 32 and 16 with a mirrored decoder and skip
// concatenation. Every conv block is conv3x3 -> GroupNorm -> FiLM -> SiLU,
// where the FiLM scale/shift come from emb = cond_mlp(C) + time_linear(sin(k)).
// C is divided by per-dimension scales before it enters the network.
struct DenoiserConfig {
  std::array<int, 3> widths{32, 64, 128};
  int groups = 8;
  int embed_dim = 128;
  int time_dim = 32;
  int cond_dim = static_cast<int>(StyleFeature::kDim);

  void validate() const;
  friend bool operator==(const DenoiserConfig&, const DenoiserConfig&) = default;
};

enum class LayerKind { kConv, kCondLinear, kTimeLinear, kFilm };
const char* to_string(LayerKind kind);

/// One weight or bias tensor inside the flat parameter buffer.
struct ParamBlock {
  std::string name;
  LayerKind kind;
  std::size_t offset;
  std::size_t size;
};

/// Flat-buffer network. Instantiated for float (training, inference) and
/// double (gradient checks).
template <typename T>
class Denoiser {
 public:
  class Workspace;

  explicit Denoiser(const DenoiserConfig& config);
  ~Denoiser();
  Denoiser(Denoiser&&) noexcept;
  Denoiser& operator=(Denoiser&&) noexcept;

  const DenoiserConfig& config() const;
  std::size_t parameter_count() const;
  const std::vector<ParamBlock>& layout() const;

  /// Scaled normal conv/linear weights, zero biases.
  std::vector<T> init_params(std::uint64_t seed) const;

  std::shared_ptr<Workspace> make_workspace() const;

  /// `xk` and `eps_out` hold 64*64*3 values in DeltaImage order; `cond` holds
  /// cond_dim already-normalised values.
  void predict(std::span<const T> params, const T* xk, const T* cond, int k, T* eps_out,
               Workspace& ws) const;

  /// Backpropagates d(loss)/d(eps_out) through the last predict() on `ws` and
  /// accumulates into `grad`.
  void backward(std::span<const T> params, const T* d_eps, Workspace& ws, std::span<T> grad) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

extern template class Denoiser<float>;
extern template class Denoiser<double>;

/// Noise-prediction loss on one sample, mean over the 12288 values:
/// || eps - eps_theta(sqrt(abar) x0 + sqrt(1-abar) eps, L_I, C, k) ||^2 / n.
/// When `grad` is non-empty the gradient (times `grad_scale`) is accumulated.
template <typename T>
T sample_loss(const Denoiser<T>& net, std::span<const T> params, const T* x0, const T* cond, int k,
              const T* eps, const NoiseSchedule& sched, typename Denoiser<T>::Workspace& ws,
              std::span<T> grad = {}, T grad_scale = T(1));

/// Trained weights plus the condition scaling they were trained with.
struct DenoiserParams {
  DenoiserConfig config;
  std::vector<float> weights;
  std::vector<double> cond_scale;  // cond_dim entries, all > 0
  // The network sees delta * delta_scale so the data has unit RMS; raw LUT
  // deltas are far smaller than the unit-variance noise.
  double delta_scale = 1.0;

  friend bool operator==(const DenoiserParams&, const DenoiserParams&) = default;
};

/// Clamp applied to C / scale so an out-of-distribution condition cannot
/// saturate the network.
inline constexpr double kCondClip = 5.0;

std::vector<float> normalize_condition(const ConditionVector& c, std::span<const double> scale);

/// eps_theta(x_k, L_I, C, k) with float weights.
DeltaImage denoiser_predict(const DeltaImage& xk, const ConditionVector& cond, int k,
                            const DenoiserParams& params);

struct DiffusionModel {
  DenoiserParams params;
  NoiseSchedule schedule;
};

DeltaImage ddim_sample(const ConditionVector& cond, const DiffusionModel& model, int steps = 25,
                       std::uint64_t seed = 0);

/// C = feature(reference) - feature(input), sample a delta, add identity.
Lut3D generate_lut(const Frame& input_key, const Frame& reference_key, const DiffusionModel& model,
                   std::uint64_t seed = 0, int steps = 25,
                   const StyleExtractor& extractor = StatisticalStyleExtractor());

/// Same as generate_lut but from a precomputed condition.
Lut3D generate_lut_from_condition(const ConditionVector& cond, const DiffusionModel& model,
                                  std::uint64_t seed = 0, int steps = 25);

}  // namespace gradeforge
