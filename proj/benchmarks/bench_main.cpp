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

#include <benchmark/benchmark.h>

#include <random>

#include "gradeforge/dataset.hpp"
#include "gradeforge/denoiser.hpp"
#include "gradeforge/features.hpp"
#include "gradeforge/metrics.hpp"

using namespace gradeforge;

namespace {

Frame noise_frame(int w, int h, std::uint64_t seed) {
  Frame f(w, h);
  std::mt19937_64 rng(seed);
  for (float& v : f.mutable_pixels()) v = static_cast<float>(rng() & 0xff) / 255.f;
  return f;
}

void BM_ApplyLut(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Frame f = noise_frame(side, side, 1);
  const Lut3D lut = builtin_looks(33)[6].lut;
  for (auto _ : state) benchmark::DoNotOptimize(apply_lut(lut, f));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_ApplyLut)->Arg(256)->Arg(512);

void BM_ApplyLutClip(benchmark::State& state) {
  VideoClip clip;
  for (int i = 0; i < 48; ++i) clip.frames.push_back(noise_frame(512, 512, static_cast<std::uint64_t>(i)));
  const Lut3D lut = builtin_looks(33)[0].lut;
  const auto workers = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(apply_lut_clip(lut, clip, workers));
  state.SetItemsProcessed(state.iterations() * 48);
}
BENCHMARK(BM_ApplyLutClip)->Arg(1)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_StyleFeature(benchmark::State& state) {
  const Frame f = noise_frame(512, 512, 2);
  for (auto _ : state) benchmark::DoNotOptimize(extract_style_feature(f));
}
BENCHMARK(BM_StyleFeature)->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
  const Frame a = noise_frame(512, 512, 3), b = noise_frame(512, 512, 4);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim)->Unit(benchmark::kMillisecond);

void BM_DenoiserForward(benchmark::State& state) {
  DenoiserConfig cfg;
  cfg.widths = {8, 16, 32};
  cfg.embed_dim = 64;
  const Denoiser<float> net(cfg);
  const auto params = net.init_params(1);
  auto ws = net.make_workspace();
  std::vector<float> x(DeltaImage::kValues, 0.1f), c(static_cast<std::size_t>(cfg.cond_dim), 0.f),
      out(DeltaImage::kValues);
  for (auto _ : state) {
    net.predict(params, x.data(), c.data(), 500, out.data(), *ws);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_DenoiserForward)->Unit(benchmark::kMillisecond);

void BM_DenoiserTrainStep(benchmark::State& state) {
  DenoiserConfig cfg;
  cfg.widths = {8, 16, 32};
  cfg.embed_dim = 64;
  const Denoiser<float> net(cfg);
  const auto params = net.init_params(1);
  std::vector<float> grad(params.size());
  auto ws = net.make_workspace();
  const NoiseSchedule sched = make_schedule(kDefaultDiffusionSteps, kDefaultBetaStart, kDefaultBetaEnd);
  std::vector<float> x0(DeltaImage::kValues, 0.1f), eps(DeltaImage::kValues, 0.5f),
      c(static_cast<std::size_t>(cfg.cond_dim), 0.f);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_loss<float>(net, params, x0.data(), c.data(), 500, eps.data(), sched, *ws, grad));
  }
}
BENCHMARK(BM_DenoiserTrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
