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

#include "gradeforge/trainer.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "gradeforge/error.hpp"

namespace gradeforge {

TrainingSample make_training_sample(const GradingTriple& triple, const StyleExtractor& extractor) {
  TrainingSample s;
  s.delta_image = reshape_delta(triple.target_delta);
  s.condition = condition_vector(extractor.extract(triple.reference_frame), extractor.extract(triple.input_frame));
  return s;
}

void TrainConfig::validate() const {
  model.validate();
  if (batch_size < 1) throw_invalid("train: batch_size must be >= 1");
  if (steps < 0) throw_invalid("train: steps must be >= 0");
  if (!(learning_rate >= 0.0)) throw_invalid("train: learning rate must be >= 0");
  if (!(weight_decay >= 0.0)) throw_invalid("train: weight decay must be >= 0");
  if (!(cond_dropout >= 0.0 && cond_dropout <= 1.0)) throw_invalid("train: cond_dropout must be in [0,1]");
  if (!(grad_clip >= 0.0)) throw_invalid("train: grad_clip must be >= 0");
}

std::vector<double> condition_scale(std::span<const TrainingSample> samples) {
  if (samples.empty()) throw_invalid("condition_scale: no samples");
  const std::size_t d = samples.front().condition.values.size();
  std::vector<double> sq(d, 0.0);
  for (const auto& s : samples) {
    if (s.condition.values.size() != d) throw_invalid("condition_scale: dimension mismatch");
    for (std::size_t i = 0; i < d; ++i) sq[i] += s.condition.values[i] * s.condition.values[i];
  }
  std::vector<double> scale(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double rms = std::sqrt(sq[i] / static_cast<double>(samples.size()));
    scale[i] = rms > 1e-8 ? rms : 1.0;
  }
  return scale;
}

double delta_scale(std::span<const TrainingSample> samples) {
  if (samples.empty()) throw_invalid("delta_scale: no samples");
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& s : samples) {
    for (double v : s.delta_image.values) sum += v * v;
    count += s.delta_image.values.size();
  }
  const double rms = std::sqrt(sum / static_cast<double>(count));
  return rms > 1e-8 ? 1.0 / rms : 1.0;
}

namespace {

TrainResult run(std::span<const TrainingSample> samples, const TrainConfig& cfg, std::vector<float> params) {
  const Denoiser<float> net(cfg.model);
  if (params.size() != net.parameter_count()) {
    throw_invalid("train: initial weights have " + std::to_string(params.size()) + " values, model needs " +
                  std::to_string(net.parameter_count()));
  }
  const NoiseSchedule sched = make_schedule(cfg.schedule_steps, cfg.beta_start, cfg.beta_end);
  TrainResult result;
  result.model.schedule = sched;
  result.model.params.config = cfg.model;
  result.model.params.cond_scale = condition_scale(samples);
  result.model.params.delta_scale = delta_scale(samples);
  const double ds = result.model.params.delta_scale;

  // Pre-normalised float copies of every sample.
  const std::size_t n = DeltaImage::kValues;
  const auto cd = static_cast<std::size_t>(cfg.model.cond_dim);
  std::vector<float> x0s(samples.size() * n), conds(samples.size() * cd);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].delta_image.values.size() != n) throw_invalid("train: bad delta raster");
    std::transform(samples[i].delta_image.values.begin(), samples[i].delta_image.values.end(), x0s.begin() + i * n,
                   [ds](double v) { return static_cast<float>(v * ds); });
    const auto c = normalize_condition(samples[i].condition, result.model.params.cond_scale);
    if (c.size() != cd) throw_invalid("train: condition dimension does not match the model");
    std::copy(c.begin(), c.end(), conds.begin() + i * cd);
  }
  const std::vector<float> zero_x(n, 0.f), zero_c(cd, 0.f);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  std::uniform_int_distribution<int> pick_k(1, sched.steps);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<float> gauss(0.f, 1.f);

  std::vector<float> grad(params.size()), m(params.size(), 0.f), v(params.size(), 0.f), eps(n);
  auto ws = net.make_workspace();
  result.loss_trace.reserve(static_cast<std::size_t>(cfg.steps));
  const float inv_batch = 1.f / static_cast<float>(cfg.batch_size);

  for (int step = 0; step < cfg.steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.f);
    double loss = 0.0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const std::size_t idx = pick(rng);
      const int k = pick_k(rng);
      const bool drop = unit(rng) < cfg.cond_dropout;
      for (float& e : eps) e = gauss(rng);
      const float* x0 = drop ? zero_x.data() : x0s.data() + idx * n;
      const float* c = drop ? zero_c.data() : conds.data() + idx * cd;
      const float l = sample_loss<float>(net, params, x0, c, k, eps.data(), sched, *ws, grad, inv_batch);
      if (!std::isfinite(l)) {
        std::ostringstream msg;
        msg << "non-finite loss at step " << step << ", batch slot " << b << " (sample " << idx << ", k=" << k
            << "); recent losses:";
        const std::size_t from = result.loss_trace.size() > 10 ? result.loss_trace.size() - 10 : 0;
        for (std::size_t i = from; i < result.loss_trace.size(); ++i) msg << ' ' << result.loss_trace[i];
        throw Error(ErrorKind::kTraining, msg.str());
      }
      loss += l;
    }
    loss /= cfg.batch_size;

    if (cfg.grad_clip > 0.0) {
      double norm2 = 0.0;
      for (float g : grad) norm2 += static_cast<double>(g) * g;
      const double norm = std::sqrt(norm2);
      if (norm > cfg.grad_clip) {
        const auto f = static_cast<float>(cfg.grad_clip / norm);
        for (float& g : grad) g *= f;
      }
    }

    // AdamW with decoupled weight decay.
    const double t = step + 1;
    const double c1 = 1.0 - std::pow(cfg.adam_beta1, t);
    const double c2 = 1.0 - std::pow(cfg.adam_beta2, t);
    const auto b1 = static_cast<float>(cfg.adam_beta1), b2 = static_cast<float>(cfg.adam_beta2);
    const auto lr = static_cast<float>(cfg.learning_rate);
    const auto wd = static_cast<float>(cfg.weight_decay);
    const auto ae = static_cast<float>(cfg.adam_eps);
    const auto ic1 = static_cast<float>(1.0 / c1), ic2 = static_cast<float>(1.0 / c2);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = b1 * m[i] + (1.f - b1) * grad[i];
      v[i] = b2 * v[i] + (1.f - b2) * grad[i] * grad[i];
      const float mh = m[i] * ic1;
      const float vh = v[i] * ic2;
      params[i] -= lr * (mh / (std::sqrt(vh) + ae) + wd * params[i]);
    }
    result.loss_trace.push_back(loss);
    if (cfg.on_step) cfg.on_step(step, loss);
    if (cfg.on_snapshot && cfg.snapshot_every > 0 && (step + 1) % cfg.snapshot_every == 0) {
      result.model.params.weights = params;
      cfg.on_snapshot(step + 1, result.model);
    }
  }
  result.model.params.weights = std::move(params);
  return result;
}

}  // namespace

TrainResult train(std::span<const TrainingSample> samples, const TrainConfig& config) {
  config.validate();
  if (samples.empty()) throw_invalid("train: empty dataset");
  const Denoiser<float> net(config.model);
  return run(samples, config, net.init_params(config.seed));
}

TrainResult train(std::span<const TrainingSample> samples, const TrainConfig& config,
                  const std::vector<float>& initial) {
  config.validate();
  if (samples.empty()) throw_invalid("train: empty dataset");
  return run(samples, config, initial);
}

std::string loss_csv(std::span<const double> trace) {
  std::string out = "step,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g\n", i + 1, trace[i]);
    out += buf;
  }
  return out;
}

void write_loss_csv(const std::filesystem::path& path, std::span<const double> trace) {
  std::ofstream out(path, std::ios::binary);
  out << loss_csv(trace);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
}

}  // namespace gradeforge
