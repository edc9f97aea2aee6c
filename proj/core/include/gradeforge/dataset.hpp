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
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gradeforge/frame.hpp"
#include "gradeforge/lut.hpp"

namespace gradeforge {

using Rng = std::mt19937_64;

/// Counter-based child seed (splitmix64 of root + counter).
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t counter);

struct NamedLut {
  std::string name;
  Lut3D lut;
};

struct LutBaseCatalog {
  std::vector<NamedLut> bases;      // sorted by name
  std::vector<std::string> train;   // names, shuffled order
  std::vector<std::string> test;
  std::vector<std::string> failures;  // "<file>: <reason>" for skipped files

  std::vector<Lut3D> train_luts() const;
  std::vector<Lut3D> test_luts() const;
  const NamedLut* find(const std::string& name) const;
};

/// Seeded shuffle of the bases, then train = first round(ratio * count).
LutBaseCatalog split_catalog(std::vector<NamedLut> bases, double split_ratio, std::uint64_t seed);

/// Parses every `*.cube` in `dir`. Unparseable files are recorded in
/// `failures`; fewer than two usable bases raise kInvalidCatalog.
LutBaseCatalog load_catalog(const std::filesystem::path& dir, double split_ratio = 0.9,
                            std::uint64_t seed = 0);

/// {"train": [...], "test": [...]} as JSON text.
std::string split_manifest(const LutBaseCatalog& catalog);

struct MixOptions {
  int min_bases = 2;
  int max_bases = 4;
  double extrapolation_probability = 0.3;
  double max_extrapolation = 1.5;
};

struct MixRecipe {
  std::vector<std::size_t> indices;
  std::vector<double> weights;  // sums to 1 within 1e-9
};

MixRecipe draw_mix_recipe(std::size_t base_count, Rng& rng, const MixOptions& options = {});
Lut3D mix_from_recipe(std::span<const Lut3D> bases, const MixRecipe& recipe);
/// draw_mix_recipe + mix_from_recipe over the training bases.
Lut3D synth_random_lut(std::span<const Lut3D> train_bases, Rng& rng, const MixOptions& options = {});

struct GradingTriple {
  Frame input_frame;      // ungraded content
  Frame raw_reference;    // ungraded source of the reference
  Frame reference_frame;  // apply_lut(lut, raw_reference)
  Lut3D lut;
  DeltaLut target_delta;  // delta_from(lut)
  std::size_t input_index = 0;
  std::size_t reference_index = 0;
};

/// Two distinct frames of one pool; the reference side is graded by `lut`.
GradingTriple make_triple(std::span<const Frame> pool, const Lut3D& lut, Rng& rng);

struct SceneOptions {
  int width = 256;
  int height = 256;
  int frames = 6;
  int min_shapes = 5;
  int max_shapes = 9;
  double max_speed_px = 3.0;  // per-frame shape displacement
  double noise = 0.01;
};

/// Procedural "movie scene": gradient backdrop, moving shapes, mild noise.
VideoClip generate_scene(std::uint64_t seed, const SceneOptions& options = {});

/// `<scene>/<frame>.png` layout.
std::vector<VideoClip> load_corpus(const std::filesystem::path& dir);
void save_corpus(const std::vector<VideoClip>& scenes, const std::filesystem::path& dir);

struct LookPreset {
  std::string name;
  std::string description;
  Lut3D lut;
};

/// The bundled set of ten hand-designed looks at 16^3.
std::vector<LookPreset> builtin_looks(int size = kDiffusionLutSize);
/// Writes `<name>.cube` files plus the description sidecar.
void write_look_catalog(const std::vector<LookPreset>& looks, const std::filesystem::path& dir);

}  // namespace gradeforge
