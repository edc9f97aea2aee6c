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

#include "gradeforge/lut.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "gradeforge/error.hpp"

namespace gradeforge {

Lut3D::Lut3D(int size, std::vector<float> entries, Rgb domain_min, Rgb domain_max)
    : size_(size), entries_(std::move(entries)), domain_min_(domain_min), domain_max_(domain_max) {
  if (size_ < 2) throw_invalid("LUT size must be >= 2, got " + std::to_string(size_));
  if (entries_.size() != lattice_points() * 3) {
    throw_invalid("LUT of size " + std::to_string(size_) + " needs " +
                  std::to_string(lattice_points() * 3) + " values, got " +
                  std::to_string(entries_.size()));
  }
  for (float v : entries_) {
    if (!std::isfinite(v)) throw_invalid("LUT entries must be finite");
  }
  for (int c = 0; c < 3; ++c) {
    if (!std::isfinite(domain_min_[c]) || !std::isfinite(domain_max_[c]) ||
        !(domain_min_[c] < domain_max_[c])) {
      throw_invalid("LUT domain_min must be below domain_max on every channel");
    }
  }
}

namespace {

std::vector<float> lattice_coordinates(int size, const Rgb& lo, const Rgb& hi) {
  std::vector<float> out(static_cast<std::size_t>(size) * size * size * 3);
  const double last = size - 1;
  std::size_t o = 0;
  for (int b = 0; b < size; ++b) {
    for (int g = 0; g < size; ++g) {
      for (int r = 0; r < size; ++r) {
        const int idx[3] = {r, g, b};
        for (int c = 0; c < 3; ++c) {
          out[o++] = static_cast<float>(lo[c] + (hi[c] - lo[c]) * (idx[c] / last));
        }
      }
    }
  }
  return out;
}

// Fractions this close to a lattice node are snapped onto it so that inputs
// sitting on the lattice return the stored entry exactly.
constexpr double kSnap = 1e-7;

struct AxisPos {
  int i;
  double f;
};

inline AxisPos locate(float v, double lo, double hi, double scale, int n) {
  double x = static_cast<double>(v);
  x = x < lo ? lo : (x > hi ? hi : x);
  const double t = (x - lo) * scale;
  const double fl = std::floor(t);
  int i = static_cast<int>(fl);
  double f = t - fl;
  if (f > 1.0 - kSnap) {
    i += 1;
    f = 0.0;
  } else if (f < kSnap) {
    f = 0.0;
  }
  if (i >= n - 1) {
    i = n - 2;
    f = 1.0;
  }
  return {i, f};
}

inline float clamp01(double v) {
  return static_cast<float>(v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v));
}

// Precomputed per-LUT constants for the pixel kernel.
class TrilinearKernel {
 public:
  explicit TrilinearKernel(const Lut3D& lut)
      : n_(lut.size()), data_(lut.entries().data()) {
    for (int c = 0; c < 3; ++c) {
      lo_[c] = lut.domain_min()[c];
      hi_[c] = lut.domain_max()[c];
      scale_[c] = (n_ - 1) / (hi_[c] - lo_[c]);
    }
    stride_g_ = static_cast<std::size_t>(n_) * 3;
    stride_b_ = static_cast<std::size_t>(n_) * n_ * 3;
  }

  void operator()(const float* in, float* out) const {
    const AxisPos pr = locate(in[0], lo_[0], hi_[0], scale_[0], n_);
    const AxisPos pg = locate(in[1], lo_[1], hi_[1], scale_[1], n_);
    const AxisPos pb = locate(in[2], lo_[2], hi_[2], scale_[2], n_);
    const float* c000 = data_ + pr.i * 3 + pg.i * stride_g_ + pb.i * stride_b_;
    const float* c100 = c000 + 3;
    const float* c010 = c000 + stride_g_;
    const float* c110 = c010 + 3;
    const float* c001 = c000 + stride_b_;
    const float* c101 = c001 + 3;
    const float* c011 = c001 + stride_g_;
    const float* c111 = c011 + 3;
    const double fr = pr.f, fg = pg.f, fb = pb.f;
    const double ur = 1.0 - fr, ug = 1.0 - fg, ub = 1.0 - fb;
    for (int c = 0; c < 3; ++c) {
      const double x00 = c000[c] * ur + c100[c] * fr;
      const double x10 = c010[c] * ur + c110[c] * fr;
      const double x01 = c001[c] * ur + c101[c] * fr;
      const double x11 = c011[c] * ur + c111[c] * fr;
      const double y0 = x00 * ug + x10 * fg;
      const double y1 = x01 * ug + x11 * fg;
      out[c] = clamp01(y0 * ub + y1 * fb);
    }
  }

 private:
  int n_;
  const float* data_;
  double lo_[3];
  double hi_[3];
  double scale_[3];
  std::size_t stride_g_;
  std::size_t stride_b_;
};

void apply_into(const TrilinearKernel& kernel, const Frame& in, Frame& out) {
  const float* src = in.pixels().data();
  float* dst = out.mutable_pixels().data();
  const std::size_t n = in.pixel_count();
  for (std::size_t p = 0; p < n; ++p) kernel(src + 3 * p, dst + 3 * p);
}

}  // namespace

Lut3D identity_lut(int size) {
  if (size < 2) throw_invalid("identity_lut: size must be >= 2");
  return Lut3D(size, lattice_coordinates(size, {0.f, 0.f, 0.f}, {1.f, 1.f, 1.f}));
}

Lut3D invert_lut(int size) {
  if (size < 2) throw_invalid("invert_lut: size must be >= 2");
  std::vector<float> e(static_cast<std::size_t>(size) * size * size * 3);
  const double last = size - 1;
  std::size_t o = 0;
  for (int b = 0; b < size; ++b)
    for (int g = 0; g < size; ++g)
      for (int r = 0; r < size; ++r) {
        e[o++] = static_cast<float>(1.0 - r / last);
        e[o++] = static_cast<float>(1.0 - g / last);
        e[o++] = static_cast<float>(1.0 - b / last);
      }
  return Lut3D(size, std::move(e));
}

Rgb sample_lut(const Lut3D& lut, const Rgb& rgb) {
  TrilinearKernel kernel(lut);
  Rgb out{};
  kernel(rgb.data(), out.data());
  return out;
}

Frame apply_lut(const Lut3D& lut, const Frame& frame) {
  if (lut.size() < 2) throw_invalid("apply_lut: LUT is empty");
  Frame out(frame.width(), frame.height());
  apply_into(TrilinearKernel(lut), frame, out);
  return out;
}

VideoClip apply_lut_clip(const Lut3D& lut, const VideoClip& clip, unsigned workers) {
  if (clip.frames.empty()) throw_invalid("apply_lut_clip: clip has no frames");
  clip.validate();
  if (lut.size() < 2) throw_invalid("apply_lut_clip: LUT is empty");

  VideoClip out;
  out.fps = clip.fps;
  out.frames.reserve(clip.frames.size());
  for (const Frame& f : clip.frames) out.frames.emplace_back(f.width(), f.height());

  const TrilinearKernel kernel(lut);
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, clip.frames.size()));

  // Contiguous frame ranges per worker; every pixel is independent so the
  // partition cannot change the result.
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) apply_into(kernel, clip.frames[i], out.frames[i]);
  };
  if (workers <= 1) {
    run(0, clip.frames.size());
    return out;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const std::size_t n = clip.frames.size();
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    pool.emplace_back(run, begin, end);
  }
  pool.clear();
  return out;
}

DeltaLut delta_from(const Lut3D& lut) {
  if (lut.domain_min() != Rgb{0.f, 0.f, 0.f} || lut.domain_max() != Rgb{1.f, 1.f, 1.f}) {
    throw_invalid("delta_from: only unit-domain LUTs have an identity offset form");
  }
  const Lut3D id = identity_lut(lut.size());
  DeltaLut d;
  d.size = lut.size();
  d.offsets.resize(lut.entries().size());
  for (std::size_t i = 0; i < d.offsets.size(); ++i) {
    d.offsets[i] = static_cast<double>(lut.entries()[i]) - static_cast<double>(id.entries()[i]);
  }
  return d;
}

Lut3D lut_from_delta(const DeltaLut& delta) {
  const Lut3D id = identity_lut(delta.size);
  if (delta.offsets.size() != id.entries().size()) {
    throw_invalid("lut_from_delta: offset count does not match size");
  }
  std::vector<float> e(delta.offsets.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    e[i] = static_cast<float>(static_cast<double>(id.entries()[i]) + delta.offsets[i]);
  }
  return Lut3D(delta.size, std::move(e));
}

DeltaImage reshape_delta(const DeltaLut& delta) {
  if (delta.size != kDiffusionLutSize) {
    throw Error(ErrorKind::kUnsupportedSize,
                "reshape_delta: only 16^3 deltas map onto a 64x64 raster, got size " +
                    std::to_string(delta.size));
  }
  if (delta.offsets.size() != DeltaImage::kValues) throw_invalid("reshape_delta: bad offset count");
  // Lattice flat index (red fastest) == raster pixel index (row-major), so the
  // reshape is an order-preserving copy.
  DeltaImage img;
  img.values = delta.offsets;
  return img;
}

DeltaLut unreshape(const DeltaImage& image) {
  if (image.values.size() != DeltaImage::kValues) throw_invalid("unreshape: bad raster size");
  return DeltaLut{kDiffusionLutSize, image.values};
}

Lut3D mix_luts(std::span<const Lut3D> luts, std::span<const double> weights) {
  if (luts.empty()) throw_invalid("mix_luts: need at least one LUT");
  if (luts.size() != weights.size()) throw_invalid("mix_luts: one weight per LUT required");
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w)) throw_invalid("mix_luts: weights must be finite");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw_invalid("mix_luts: weights must sum to 1 (got " + std::to_string(sum) + ")");
  }
  const Lut3D& head = luts.front();
  for (const Lut3D& l : luts) {
    if (l.size() != head.size()) throw_invalid("mix_luts: LUT sizes differ");
    if (l.domain_min() != head.domain_min() || l.domain_max() != head.domain_max()) {
      throw_invalid("mix_luts: LUT domains differ");
    }
  }
  std::vector<float> e(head.entries().size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < luts.size(); ++k) acc += weights[k] * luts[k].entries()[i];
    acc = std::clamp(acc, static_cast<double>(kMixClampLow), static_cast<double>(kMixClampHigh));
    e[i] = static_cast<float>(acc);
  }
  return Lut3D(head.size(), std::move(e), head.domain_min(), head.domain_max());
}

Lut3D compose_luts(const Lut3D& first, const Lut3D& second) {
  if (first.size() != second.size()) throw_invalid("compose_luts: LUT sizes differ");
  const TrilinearKernel kernel(second);
  std::vector<float> e(first.entries().size());
  const float* src = first.entries().data();
  for (std::size_t p = 0; p < first.lattice_points(); ++p) kernel(src + 3 * p, e.data() + 3 * p);
  return Lut3D(first.size(), std::move(e), first.domain_min(), first.domain_max());
}

}  // namespace gradeforge
