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

#include "gradeforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>

#include "gradeforge/error.hpp"

namespace gradeforge {
namespace {

void require_same_shape(const Frame& a, const Frame& b, const char* what) {
  if (!a.same_shape(b) || a.empty()) throw_invalid(std::string(what) + ": frame dimensions differ");
}

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(size);
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    k[i] = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable "valid" correlation: output is (w-k+1) x (h-k+1).
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h,
                                 const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int ow = w - n + 1;
  const int oh = h - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace

std::vector<double> luma_plane(const Frame& frame, const LumaWeights& luma) {
  std::vector<double> y(frame.pixel_count());
  const float* p = frame.pixels().data();
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = luma.r * p[3 * i] + luma.g * p[3 * i + 1] + luma.b * p[3 * i + 2];
  }
  return y;
}

double psnr(const Frame& a, const Frame& b) {
  require_same_shape(a, b, "psnr");
  CompensatedSum acc;
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = static_cast<double>(pa[i]) - pb[i];
    acc.add(d * d);
  }
  const double mse = acc.value() / static_cast<double>(pa.size());
  if (mse == 0.0) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Frame& a, const Frame& b, const SsimOptions& opt) {
  require_same_shape(a, b, "ssim");
  if (a.width() < opt.window || a.height() < opt.window) {
    throw_invalid("ssim: frame smaller than the " + std::to_string(opt.window) + "px window");
  }
  const int w = a.width();
  const int h = a.height();
  const auto x = luma_plane(a, opt.luma);
  const auto y = luma_plane(b, opt.luma);
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto k = gaussian_kernel(opt.window, opt.sigma);
  const auto mx = filter_valid(x, w, h, k);
  const auto my = filter_valid(y, w, h, k);
  const auto sxx = filter_valid(xx, w, h, k);
  const auto syy = filter_valid(yy, w, h, k);
  const auto sxy = filter_valid(xy, w, h, k);
  const double c1 = (opt.k1 * opt.dynamic_range) * (opt.k1 * opt.dynamic_range);
  const double c2 = (opt.k2 * opt.dynamic_range) * (opt.k2 * opt.dynamic_range);
  CompensatedSum acc;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    const double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2);
    const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
    acc.add(num / den);
  }
  return acc.value() / static_cast<double>(mx.size());
}

double blur_metric(const Frame& frame, const LumaWeights& luma) {
  constexpr int kTaps = 9;
  if (frame.width() < kTaps || frame.height() < kTaps) {
    throw_invalid("blur_metric: frame smaller than 9 px");
  }
  const int w = frame.width();
  const int h = frame.height();
  const auto f = luma_plane(frame, luma);
  auto at = [&](const std::vector<double>& p, int x, int y) {
    return p[static_cast<std::size_t>(y) * w + x];
  };
  // 9-tap box filters with edge replication.
  std::vector<double> bv(f.size()), bh(f.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sv = 0.0, sh = 0.0;
      for (int t = -kTaps / 2; t <= kTaps / 2; ++t) {
        sv += at(f, x, std::clamp(y + t, 0, h - 1));
        sh += at(f, std::clamp(x + t, 0, w - 1), y);
      }
      bv[static_cast<std::size_t>(y) * w + x] = sv / kTaps;
      bh[static_cast<std::size_t>(y) * w + x] = sh / kTaps;
    }
  }
  CompensatedSum s_fv, s_vv, s_fh, s_vh;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (y > 0) {
        const double df = std::abs(at(f, x, y) - at(f, x, y - 1));
        const double db = std::abs(at(bv, x, y) - at(bv, x, y - 1));
        s_fv.add(df);
        s_vv.add(std::max(0.0, df - db));
      }
      if (x > 0) {
        const double df = std::abs(at(f, x, y) - at(f, x - 1, y));
        const double db = std::abs(at(bh, x, y) - at(bh, x - 1, y));
        s_fh.add(df);
        s_vh.add(std::max(0.0, df - db));
      }
    }
  }
  const double fv = s_fv.value();
  const double fh = s_fh.value();
  const double bver = fv > 0.0 ? (fv - s_vv.value()) / fv : 0.0;
  const double bhor = fh > 0.0 ? (fh - s_vh.value()) / fh : 0.0;
  return std::clamp(std::max(bver, bhor), 0.0, 1.0);
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  if (values.empty()) return s;
  CompensatedSum sum;
  for (double v : values) sum.add(v);
  s.mean = sum.value() / static_cast<double>(values.size());
  CompensatedSum sq;
  for (double v : values) sq.add((v - s.mean) * (v - s.mean));
  s.stddev = std::sqrt(sq.value() / static_cast<double>(values.size()));
  return s;
}

ClipReport evaluate_clip(const VideoClip& output, const VideoClip& ground_truth,
                         double elapsed_seconds) {
  if (output.frames.size() != ground_truth.frames.size()) {
    throw_invalid("evaluate_clip: clips have different lengths");
  }
  if (output.frames.empty()) throw_invalid("evaluate_clip: empty clips");
  ClipReport r;
  r.elapsed_seconds = elapsed_seconds;
  for (std::size_t i = 0; i < output.frames.size(); ++i) {
    r.psnr.push_back(psnr(output.frames[i], ground_truth.frames[i]));
    r.ssim.push_back(ssim(output.frames[i], ground_truth.frames[i]));
    r.blur.push_back(blur_metric(output.frames[i]));
  }
  r.psnr_summary = summarize(r.psnr);
  r.ssim_summary = summarize(r.ssim);
  r.blur_summary = summarize(r.blur);
  return r;
}

std::string ClipReport::to_csv() const {
  std::string out = "# blur: higher = blurrier\nframe,psnr_db,ssim,blur,lpips,brisque\n";
  char buf[160];
  for (std::size_t i = 0; i < psnr.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.8f,%.8f,,\n", i, psnr[i], ssim[i], blur[i]);
    out += buf;
  }
  return out;
}

std::string ClipReport::summary_json() const {
  auto pack = [](const MetricSummary& s) { return nlohmann::json{{"mean", s.mean}, {"std", s.stddev}}; };
  nlohmann::json j{{"frames", psnr.size()},
                   {"psnr_db", pack(psnr_summary)},
                   {"ssim", pack(ssim_summary)},
                   {"blur", pack(blur_summary)},
                   {"blur_direction", "higher is blurrier"},
                   {"lpips", nullptr},
                   {"brisque", nullptr},
                   {"elapsed_seconds", elapsed_seconds}};
  return j.dump(2);
}

}  // namespace gradeforge
