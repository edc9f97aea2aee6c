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

#include <CLI11.hpp>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "gradeforge/checkpoint.hpp"
#include "gradeforge/config.hpp"
#include "gradeforge/cube_io.hpp"
#include "gradeforge/dataset.hpp"
#include "gradeforge/error.hpp"
#include "gradeforge/frame_io.hpp"
#include "gradeforge/keyframe.hpp"
#include "gradeforge/metrics.hpp"
#include "gradeforge/service.hpp"

namespace fs = std::filesystem;
using namespace gradeforge;

namespace {

AppConfig config_from(const std::string& path) {
  AppConfig cfg = path.empty() ? AppConfig{} : load_config(path);
  apply_env_overrides(cfg);
  return cfg;
}

VideoClip load_clip_or_image(const fs::path& p) {
  if (fs::is_directory(p)) return load_clip(p);
  VideoClip clip;
  clip.frames.push_back(load_frame(p));
  return clip;
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + p.string());
}

struct GradeArgs {
  std::string config, input, reference, checkpoint, out, cube;
  std::uint64_t seed = 0;
  int steps = 0;
  unsigned workers = 0;
};

int run_grade(const GradeArgs& a) {
  const AppConfig cfg = config_from(a.config);
  const DiffusionModel model = load_checkpoint(a.checkpoint.empty() ? cfg.server.checkpoint : a.checkpoint);
  const VideoClip input = load_clip_or_image(a.input);
  const VideoClip reference = load_clip_or_image(a.reference);
  const StatisticalStyleExtractor extractor;
  const KeyFramePair pair = select_key_frames(input, reference, [&](const Frame& f) { return extractor.extract(f).values; });
  const Lut3D lut = generate_lut(input.frames[pair.input_index], reference.frames[pair.reference_index], model, a.seed,
                                 a.steps > 0 ? a.steps : cfg.schedule.ddim_steps, extractor);
  std::printf("key pair: input %zu reference %zu similarity %.6f\n", pair.input_index, pair.reference_index,
              pair.similarity);
  if (!a.cube.empty()) save_cube(a.cube, lut, "gradeforge");
  if (!a.out.empty()) {
    const auto t0 = std::chrono::steady_clock::now();
    save_clip(apply_lut_clip(lut, input, a.workers), a.out);
    std::printf("graded %zu frames in %.2fs -> %s\n", input.size(),
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), a.out.c_str());
  }
  return 0;
}

struct TrainArgs {
  std::string config, out;
  int steps = 0;
};

int run_train(const TrainArgs& a) {
  const AppConfig cfg = config_from(a.config);
  const TrainingSection& t = cfg.training;
  const LutBaseCatalog catalog = load_catalog(cfg.catalog.dir, cfg.catalog.split_ratio, cfg.catalog.seed);
  for (const auto& f : catalog.failures) std::fprintf(stderr, "skipped %s\n", f.c_str());
  const std::vector<Lut3D> bases = catalog.train_luts();
  std::printf("catalog: %zu train bases, %zu test bases\n", catalog.train.size(), catalog.test.size());

  std::vector<VideoClip> scenes;
  if (!t.corpus.empty()) {
    scenes = load_corpus(t.corpus);
  } else {
    SceneOptions so;
    so.width = so.height = t.scene_size;
    so.frames = t.frames_per_scene;
    for (int s = 0; s < t.scenes; ++s) scenes.push_back(generate_scene(derive_seed(t.seed, s), so));
  }
  if (scenes.empty()) throw_invalid("train: no scenes");

  Rng rng(derive_seed(t.seed, 0x7472697031ull));
  const StatisticalStyleExtractor extractor;
  std::vector<TrainingSample> samples;
  samples.reserve(static_cast<std::size_t>(t.triples));
  for (int i = 0; i < t.triples; ++i) {
    const Lut3D lut = synth_random_lut(bases, rng);
    const VideoClip& scene = scenes[static_cast<std::size_t>(i) % scenes.size()];
    samples.push_back(make_training_sample(make_triple(scene.frames, lut, rng), extractor));
  }

  TrainConfig tc = cfg.train_config();
  if (a.steps > 0) tc.steps = a.steps;
  const auto t0 = std::chrono::steady_clock::now();
  double window = 0.0;
  tc.on_step = [&](int step, double loss) {
    window += loss;
    if ((step + 1) % 500 == 0) {
      std::printf("step %d loss %.5f (%.0fs)\n", step + 1, window / 500,
                  std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      std::fflush(stdout);
      window = 0.0;
    }
  };
  const fs::path out = a.out.empty() ? fs::path(cfg.server.checkpoint) : fs::path(a.out);
  const TrainResult result = train(samples, tc);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_checkpoint(out, result.model);
  const fs::path csv = t.loss_csv.empty() ? fs::path(out).replace_extension(".loss.csv") : fs::path(t.loss_csv);
  write_loss_csv(csv, result.loss_trace);
  write_text(fs::path(out).replace_extension(".split.json"), split_manifest(catalog));
  std::printf("checkpoint %s, loss trace %s\n", out.c_str(), csv.c_str());
  return 0;
}

int run_mix(const std::vector<std::string>& luts, const std::vector<double>& weights, const std::string& out) {
  if (luts.size() != weights.size()) throw_invalid("mix-luts: need one --weight per --lut");
  std::vector<Lut3D> loaded;
  for (const auto& p : luts) loaded.push_back(read_cube(p));
  save_cube(out, mix_luts(loaded, weights), "gradeforge mix");
  return 0;
}

int run_eval(const std::string& output, const std::string& truth, const std::string& csv, const std::string& summary) {
  const auto t0 = std::chrono::steady_clock::now();
  const VideoClip o = load_clip(output);
  const VideoClip g = load_clip(truth);
  const ClipReport report =
      evaluate_clip(o, g, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  if (!csv.empty()) write_text(csv, report.to_csv());
  const std::string s = report.summary_json();
  if (!summary.empty()) write_text(summary, s + "\n");
  std::printf("%s\n", s.c_str());
  return 0;
}

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int run_serve(const std::string& config) {
  const AppConfig cfg = config_from(config);
  auto catalog = std::make_shared<const PromptCatalog>(
      PromptCatalog::load(cfg.catalog.dir, cfg.catalog.low_confidence_threshold));
  ServiceOptions so;
  so.store = cfg.server.store;
  so.checkpoint = cfg.server.checkpoint;
  so.ddim_steps = cfg.schedule.ddim_steps;
  GradingService service(so, catalog);
  HttpServer server(service, cfg.server.threads);
  const int port = server.bind(cfg.server.host, cfg.server.port);
  std::printf("listening on %s:%d (store %s, model %s)\n", cfg.server.host.c_str(), port, cfg.server.store.c_str(),
              service.has_model() ? "loaded" : "missing");
  std::fflush(stdout);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.serve();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradeforge: reference-based colour grading"};
  app.require_subcommand(1);

  GradeArgs grade;
  auto* g = app.add_subcommand("grade", "grade a clip towards a reference");
  g->add_option("--config", grade.config, "config file");
  g->add_option("--input", grade.input, "input frame directory or image")->required();
  g->add_option("--reference", grade.reference, "reference frame directory or image")->required();
  g->add_option("--checkpoint", grade.checkpoint, "model checkpoint (default: server.checkpoint)");
  g->add_option("--out", grade.out, "graded frame directory");
  g->add_option("--cube", grade.cube, "write the generated LUT as .cube");
  g->add_option("--seed", grade.seed, "sampling seed");
  g->add_option("--steps", grade.steps, "DDIM steps (default: schedule.ddim_steps)");
  g->add_option("--workers", grade.workers, "LUT application threads (0 = all cores)");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train the delta-LUT diffuser on synthetic triples");
  t->add_option("--config", tr.config, "config file");
  t->add_option("--out", tr.out, "checkpoint path (default: server.checkpoint)");
  t->add_option("--steps", tr.steps, "override training.steps");

  std::vector<std::string> mix_luts_in;
  std::vector<double> mix_weights;
  std::string mix_out, mix_config;
  auto* m = app.add_subcommand("mix-luts", "weighted mix of .cube LUTs");
  m->add_option("--config", mix_config, "config file (unused)");
  m->add_option("--lut", mix_luts_in, "input .cube (repeatable)")->required();
  m->add_option("--weight", mix_weights, "weight per --lut (repeatable)")->required();
  m->add_option("--out", mix_out, "output .cube")->required();

  std::string ev_out, ev_truth, ev_csv, ev_summary, ev_config;
  auto* e = app.add_subcommand("eval", "PSNR/SSIM/blur of an output clip against ground truth");
  e->add_option("--config", ev_config, "config file (unused)");
  e->add_option("--output", ev_out, "graded frame directory")->required();
  e->add_option("--truth", ev_truth, "ground-truth frame directory")->required();
  e->add_option("--csv", ev_csv, "per-frame CSV path");
  e->add_option("--summary", ev_summary, "summary JSON path");

  std::string serve_config;
  auto* s = app.add_subcommand("serve", "run the HTTP grading service");
  s->add_option("--config", serve_config, "config file");

  std::string looks_dir;
  int looks_size = kDiffusionLutSize;
  auto* l = app.add_subcommand("make-catalog", "write the built-in look catalog (.cube + descriptions.json)");
  l->add_option("--out", looks_dir, "catalog directory")->required();
  l->add_option("--size", looks_size, "LUT lattice size");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*g) return run_grade(grade);
    if (*t) return run_train(tr);
    if (*m) return run_mix(mix_luts_in, mix_weights, mix_out);
    if (*e) return run_eval(ev_out, ev_truth, ev_csv, ev_summary);
    if (*s) return run_serve(serve_config);
    if (*l) {
      write_look_catalog(builtin_looks(looks_size), looks_dir);
      return 0;
    }
  } catch (const Error& err) {
    std::fprintf(stderr, "gradeforge: %s: %s\n", to_string(err.kind()), err.what());
    return 1;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "gradeforge: %s\n", err.what());
    return 1;
  }
  return 0;
}
