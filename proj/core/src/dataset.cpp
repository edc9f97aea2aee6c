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

#include "gradeforge/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <set>

#include "gradeforge/cube_io.hpp"
#include "gradeforge/error.hpp"
#include "gradeforge/frame_io.hpp"

namespace gradeforge {
namespace fs = std::filesystem;

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t counter) {
  std::uint64_t z = root + 0x9E3779B97F4A7C15ull * (counter + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Catalog

const NamedLut* LutBaseCatalog::find(const std::string& name) const {
  for (const auto& b : bases)
    if (b.name == name) return &b;
  return nullptr;
}

std::vector<Lut3D> LutBaseCatalog::train_luts() const {
  std::vector<Lut3D> out;
  for (const auto& n : train) out.push_back(find(n)->lut);
  return out;
}

std::vector<Lut3D> LutBaseCatalog::test_luts() const {
  std::vector<Lut3D> out;
  for (const auto& n : test) out.push_back(find(n)->lut);
  return out;
}

LutBaseCatalog split_catalog(std::vector<NamedLut> bases, double split_ratio, std::uint64_t seed) {
  if (bases.size() < 2) {
    throw Error(ErrorKind::kInvalidCatalog,
                "need at least 2 usable LUT bases, got " + std::to_string(bases.size()));
  }
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw_invalid("split ratio must be in (0,1)");
  std::sort(bases.begin(), bases.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  std::set<std::string> names;
  for (const auto& b : bases) {
    if (!names.insert(b.name).second) throw Error(ErrorKind::kInvalidCatalog, "duplicate base " + b.name);
  }
  LutBaseCatalog cat;
  std::vector<std::string> order;
  for (const auto& b : bases) order.push_back(b.name);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::lround(split_ratio * static_cast<double>(order.size())));
  cat.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  cat.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  cat.bases = std::move(bases);
  return cat;
}

LutBaseCatalog load_catalog(const fs::path& dir, double split_ratio, std::uint64_t seed) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::kIo, dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".cube") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<NamedLut> bases;
  std::vector<std::string> failures;
  for (const auto& f : files) {
    try {
      bases.push_back({f.stem().string(), read_cube(f)});
    } catch (const Error& e) {
      failures.push_back(f.filename().string() + ": " + e.what());
    }
  }
  if (bases.size() < 2) {
    std::string msg = "need at least 2 usable LUT bases in " + dir.string();
    for (const auto& f : failures) msg += "\n  " + f;
    throw Error(ErrorKind::kInvalidCatalog, msg);
  }
  LutBaseCatalog cat = split_catalog(std::move(bases), split_ratio, seed);
  cat.failures = std::move(failures);
  return cat;
}

std::string split_manifest(const LutBaseCatalog& catalog) {
  return nlohmann::json{{"train", catalog.train}, {"test", catalog.test}}.dump(2);
}

// ---------------------------------------------------------------------------
// Mixing

MixRecipe draw_mix_recipe(std::size_t base_count, Rng& rng, const MixOptions& opt) {
  if (base_count < 2) throw_invalid("draw_mix_recipe: need at least 2 bases");
  const int hi = std::min<int>(opt.max_bases, static_cast<int>(base_count));
  const int lo = std::min(opt.min_bases, hi);
  const int k = std::uniform_int_distribution<int>(lo, hi)(rng);

  std::vector<std::size_t> all(base_count);
  for (std::size_t i = 0; i < base_count; ++i) all[i] = i;
  MixRecipe r;
  for (int i = 0; i < k; ++i) {
    const auto j = std::uniform_int_distribution<std::size_t>(static_cast<std::size_t>(i), base_count - 1)(rng);
    std::swap(all[static_cast<std::size_t>(i)], all[j]);
    r.indices.push_back(all[static_cast<std::size_t>(i)]);
  }

  // Flat Dirichlet: normalised unit exponentials.
  std::exponential_distribution<double> expo(1.0);
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    r.weights.push_back(expo(rng));
    sum += r.weights.back();
  }
  for (double& w : r.weights) w /= sum;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < opt.extrapolation_probability) {
    const auto j = std::uniform_int_distribution<std::size_t>(0, r.weights.size() - 1)(rng);
    const double lambda = 1.0 + unit(rng) * (opt.max_extrapolation - 1.0);
    const double boosted = r.weights[j] * lambda;
    const double rest = 1.0 - r.weights[j];
    // Remaining weights absorb 1 - boosted; they go negative once boosted > 1.
    for (std::size_t i = 0; i < r.weights.size(); ++i) {
      if (i == j) continue;
      r.weights[i] = rest > 0.0 ? r.weights[i] * (1.0 - boosted) / rest
                                : (1.0 - boosted) / static_cast<double>(r.weights.size() - 1);
    }
    r.weights[j] = boosted;
  }
  // Fold rounding residue into the last weight so the sum is 1 to ~1 ulp.
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < r.weights.size(); ++i) s += r.weights[i];
  r.weights.back() = 1.0 - s;
  return r;
}

Lut3D mix_from_recipe(std::span<const Lut3D> bases, const MixRecipe& recipe) {
  std::vector<Lut3D> picks;
  for (std::size_t i : recipe.indices) {
    if (i >= bases.size()) throw_invalid("mix recipe index out of range");
    picks.push_back(bases[i]);
  }
  return mix_luts(picks, recipe.weights);
}

Lut3D synth_random_lut(std::span<const Lut3D> train_bases, Rng& rng, const MixOptions& options) {
  return mix_from_recipe(train_bases, draw_mix_recipe(train_bases.size(), rng, options));
}

// ---------------------------------------------------------------------------
// Triples

GradingTriple make_triple(std::span<const Frame> pool, const Lut3D& lut, Rng& rng) {
  if (pool.size() < 2) throw_invalid("make_triple: frame pool needs at least 2 frames");
  const auto a = std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng);
  auto b = std::uniform_int_distribution<std::size_t>(0, pool.size() - 2)(rng);
  if (b >= a) ++b;
  GradingTriple t;
  t.input_index = a;
  t.reference_index = b;
  t.input_frame = pool[a];
  t.raw_reference = pool[b];
  t.reference_frame = apply_lut(lut, pool[b]);
  t.lut = lut;
  t.target_delta = delta_from(lut);
  return t;
}

// ---------------------------------------------------------------------------
// Procedural scenes

namespace {

struct Shape {
  bool circle;
  double cx, cy, rx, ry;
  double vx, vy;
  float color[3];
};

void random_color(Rng& rng, float* out) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // HSV with a spread of saturations so scenes are neither all grey nor all neon.
  const double h = u(rng) * 6.0;
  const double s = 0.15 + 0.75 * u(rng);
  const double v = 0.2 + 0.75 * u(rng);
  const int sector = static_cast<int>(h) % 6;
  const double f = h - std::floor(h);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  double r = v, g = t, b = p;
  switch (sector) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
  out[0] = static_cast<float>(r);
  out[1] = static_cast<float>(g);
  out[2] = static_cast<float>(b);
}

}  // namespace

VideoClip generate_scene(std::uint64_t seed, const SceneOptions& opt) {
  if (opt.frames < 1) throw_invalid("generate_scene: need at least one frame");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  float c0[3], c1[3];
  random_color(rng, c0);
  random_color(rng, c1);
  const double angle = u(rng) * 6.283185307179586;
  const double dx = std::cos(angle), dy = std::sin(angle);

  const int n_shapes = std::uniform_int_distribution<int>(opt.min_shapes, opt.max_shapes)(rng);
  std::vector<Shape> shapes(static_cast<std::size_t>(n_shapes));
  const double side = std::min(opt.width, opt.height);
  for (auto& s : shapes) {
    s.circle = u(rng) < 0.5;
    s.cx = u(rng) * opt.width;
    s.cy = u(rng) * opt.height;
    s.rx = side * (0.06 + 0.18 * u(rng));
    s.ry = side * (0.06 + 0.18 * u(rng));
    s.vx = (2.0 * u(rng) - 1.0) * opt.max_speed_px;
    s.vy = (2.0 * u(rng) - 1.0) * opt.max_speed_px;
    random_color(rng, s.color);
  }

  VideoClip clip;
  clip.fps = 24.0;
  for (int fi = 0; fi < opt.frames; ++fi) {
    Rng noise_rng(derive_seed(seed, static_cast<std::uint64_t>(fi)));
    std::normal_distribution<double> noise(0.0, opt.noise);
    Frame f(opt.width, opt.height);
    for (int y = 0; y < opt.height; ++y) {
      for (int x = 0; x < opt.width; ++x) {
        const double t = std::clamp(0.5 + ((x - opt.width / 2.0) * dx + (y - opt.height / 2.0) * dy) / side, 0.0, 1.0);
        double px[3];
        for (int c = 0; c < 3; ++c) px[c] = c0[c] * (1.0 - t) + c1[c] * t;
        for (const auto& s : shapes) {
          const double sx = x - (s.cx + s.vx * fi);
          const double sy = y - (s.cy + s.vy * fi);
          const bool inside = s.circle ? (sx * sx) / (s.rx * s.rx) + (sy * sy) / (s.ry * s.ry) <= 1.0
                                       : std::abs(sx) <= s.rx && std::abs(sy) <= s.ry;
          if (inside)
            for (int c = 0; c < 3; ++c) px[c] = s.color[c];
        }
        float* o = f.at(x, y);
        for (int c = 0; c < 3; ++c) o[c] = static_cast<float>(std::clamp(px[c] + noise(noise_rng), 0.0, 1.0));
      }
    }
    clip.frames.push_back(std::move(f));
  }
  return clip;
}

std::vector<VideoClip> load_corpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::kIo, dir.string() + " is not a directory");
  std::vector<fs::path> scenes;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) scenes.push_back(e.path());
  std::sort(scenes.begin(), scenes.end());
  if (scenes.empty()) throw Error(ErrorKind::kIo, dir.string() + " has no scene subdirectories");
  std::vector<VideoClip> out;
  for (const auto& s : scenes) out.push_back(load_clip(s));
  return out;
}

void save_corpus(const std::vector<VideoClip>& scenes, const fs::path& dir) {
  char name[32];
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    std::snprintf(name, sizeof name, "scene_%04zu", i);
    save_clip(scenes[i], dir / name);
  }
}

// ---------------------------------------------------------------------------
// Bundled looks

namespace {

using ColorFn = std::function<void(double&, double&, double&)>;

Lut3D lut_from_fn(int size, const ColorFn& fn) {
  const Lut3D id = identity_lut(size);
  std::vector<float> e(id.entries().begin(), id.entries().end());
  for (std::size_t i = 0; i < e.size(); i += 3) {
    double r = e[i], g = e[i + 1], b = e[i + 2];
    fn(r, g, b);
    e[i] = static_cast<float>(std::clamp(r, 0.0, 1.0));
    e[i + 1] = static_cast<float>(std::clamp(g, 0.0, 1.0));
    e[i + 2] = static_cast<float>(std::clamp(b, 0.0, 1.0));
  }
  return Lut3D(size, std::move(e));
}

double luma(double r, double g, double b) { return 0.2126 * r + 0.7152 * g + 0.0722 * b; }

double s_curve(double x, double amount) {
  const double s = x * x * (3.0 - 2.0 * x);
  return x + amount * (s - x);
}

void saturate(double& r, double& g, double& b, double k) {
  const double l = luma(r, g, b);
  r = l + k * (r - l);
  g = l + k * (g - l);
  b = l + k * (b - l);
}

}  // namespace

std::vector<LookPreset> builtin_looks(int size) {
  std::vector<LookPreset> looks;
  auto add = [&](std::string name, std::string desc, const ColorFn& fn) {
    looks.push_back({std::move(name), std::move(desc), lut_from_fn(size, fn)});
  };
  add("warm_golden",
      "Warm golden tone: pushes reds and yellows up and pulls blue down for a sunny, cozy afternoon feel.",
      [](double& r, double& g, double& b) {
        r = r * 1.08 + 0.05;
        g = g * 1.02 + 0.02;
        b = b * 0.80;
      });
  add("cool_night",
      "Cool blue tone: shifts colors toward blue and cyan, reducing warmth for a cold, calm, wintry night mood.",
      [](double& r, double& g, double& b) {
        r = r * 0.82;
        g = g * 0.97 + 0.02;
        b = b * 1.08 + 0.07;
      });
  add("punchy_contrast",
      "Increase contrast with deeper shadows and brighter highlights for a punchy, dramatic, crisp look.",
      [](double& r, double& g, double& b) {
        r = s_curve(r, 0.9);
        g = s_curve(g, 0.9);
        b = s_curve(b, 0.9);
      });
  add("faded_film",
      "Faded film look: lifted blacks, lower contrast and softened, washed out colors like vintage matte prints.",
      [](double& r, double& g, double& b) {
        saturate(r, g, b, 0.8);
        r = 0.12 + 0.76 * r;
        g = 0.11 + 0.76 * g;
        b = 0.13 + 0.72 * b;
      });
  add("muted_palette",
      "Muted palette: reduces saturation strongly for subdued, quiet, desaturated and understated colors.",
      [](double& r, double& g, double& b) { saturate(r, g, b, 0.35); });
  add("vivid_pop",
      "Vivid colors: boosts saturation so hues look rich, bold, colorful and lively.",
      [](double& r, double& g, double& b) { saturate(r, g, b, 1.6); });
  add("teal_orange",
      "Teal and orange blockbuster grade: teal shadows with orange skin tones and highlights for a cinematic action feel.",
      [](double& r, double& g, double& b) {
        const double l = luma(r, g, b);
        r += -0.10 * (1.0 - l) + 0.12 * l;
        g += 0.03 * (1.0 - l) + 0.03 * l;
        b += 0.12 * (1.0 - l) - 0.12 * l;
      });
  add("sepia_antique",
      "Sepia antique look: brownish monochrome toning that makes footage feel old, nostalgic and historic.",
      [](double& r, double& g, double& b) {
        const double sr = 0.393 * r + 0.769 * g + 0.189 * b;
        const double sg = 0.349 * r + 0.686 * g + 0.168 * b;
        const double sb = 0.272 * r + 0.534 * g + 0.131 * b;
        r = 0.15 * r + 0.85 * sr;
        g = 0.15 * g + 0.85 * sg;
        b = 0.15 * b + 0.85 * sb;
      });
  add("cross_process",
      "Cross processed look: green yellow cast, crushed blue channel and strong color shifts like experimental chemistry.",
      [](double& r, double& g, double& b) {
        r = s_curve(r, 0.7);
        g = std::pow(g, 0.8);
        b = 0.18 + 0.6 * b;
      });
  add("bleach_bypass",
      "Bleach bypass: silvery desaturated image with harsh high contrast, gritty and gloomy war film style.",
      [](double& r, double& g, double& b) {
        saturate(r, g, b, 0.45);
        r = s_curve(r, 1.0);
        g = s_curve(g, 1.0);
        b = s_curve(b, 1.0);
      });
  return looks;
}

void write_look_catalog(const std::vector<LookPreset>& looks, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::json j = nlohmann::json::array();
  for (const auto& l : looks) {
    save_cube(dir / (l.name + ".cube"), l.lut, l.name);
    j.push_back({{"name", l.name}, {"description", l.description}});
  }
  std::ofstream out(dir / "descriptions.json");
  out << j.dump(2) << "\n";
  if (!out) throw Error(ErrorKind::kIo, "cannot write descriptions in " + dir.string());
}

}  // namespace gradeforge
