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

#include "gradeforge/denoiser.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "gradeforge/error.hpp"

namespace gradeforge {

void DenoiserConfig::validate() const {
  for (int w : widths) {
    if (w < 1) throw_invalid("denoiser: widths must be positive");
    if (groups < 1 || w % groups != 0) {
      throw_invalid("denoiser: every width must be divisible by the group count");
    }
  }
  if (embed_dim < 1) throw_invalid("denoiser: embed_dim must be positive");
  if (time_dim < 2 || time_dim % 2 != 0) throw_invalid("denoiser: time_dim must be even and >= 2");
  if (cond_dim < 1) throw_invalid("denoiser: cond_dim must be positive");
}

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kCondLinear: return "cond_linear";
    case LayerKind::kTimeLinear: return "time_linear";
    case LayerKind::kFilm: return "film";
  }
  return "?";
}

namespace {

constexpr int kSide = DeltaImage::kSide;
constexpr int kInChannels = 6;
constexpr int kOutChannels = 3;
constexpr int kBlocks = 7;  // normalised conv blocks; the output conv is separate
constexpr double kGroupNormEps = 1e-5;

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using CMap = Eigen::Map<const Mat<T>>;
template <typename T>
using MMap = Eigen::Map<Mat<T>>;
template <typename T>
using CVMap = Eigen::Map<const Vec<T>>;
template <typename T>
using MVMap = Eigen::Map<Vec<T>>;

struct ConvSpec {
  int cin = 0;
  int cout = 0;
  int side = 0;
  std::size_t w = 0, b = 0;        // conv weight (cout x 9cin) and bias
  std::size_t fw = 0, fb = 0;      // FiLM weight (2cout x embed) and bias
};

// Rows are ordered (tap, channel): row = tap * cin + c, so each tap copies a
// contiguous channel column.
template <typename T>
void im2col(const Mat<T>& x, int side, Mat<T>& cols) {
  const int cin = static_cast<int>(x.rows());
  cols.resize(9 * cin, static_cast<Eigen::Index>(side) * side);
  for (int y = 0; y < side; ++y) {
    for (int xx = 0; xx < side; ++xx) {
      const int p = y * side + xx;
      T* dst = cols.col(p).data();
      for (int ky = 0; ky < 3; ++ky) {
        const int sy = y + ky - 1;
        for (int kx = 0; kx < 3; ++kx) {
          const int sx = xx + kx - 1;
          T* d = dst + (ky * 3 + kx) * cin;
          if (sy < 0 || sy >= side || sx < 0 || sx >= side) {
            std::fill(d, d + cin, T(0));
          } else {
            const T* s = x.col(sy * side + sx).data();
            std::copy(s, s + cin, d);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const Mat<T>& cols, int side, Mat<T>& dx) {
  const int cin = static_cast<int>(dx.rows());
  for (int y = 0; y < side; ++y) {
    for (int xx = 0; xx < side; ++xx) {
      const T* src = cols.col(y * side + xx).data();
      for (int ky = 0; ky < 3; ++ky) {
        const int sy = y + ky - 1;
        if (sy < 0 || sy >= side) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int sx = xx + kx - 1;
          if (sx < 0 || sx >= side) continue;
          const T* s = src + (ky * 3 + kx) * cin;
          T* d = dx.col(sy * side + sx).data();
          for (int c = 0; c < cin; ++c) d[c] += s[c];
        }
      }
    }
  }
}

template <typename T>
void avg_pool(const Mat<T>& x, int side, Mat<T>& out) {
  const int h = side / 2;
  out.resize(x.rows(), static_cast<Eigen::Index>(h) * h);
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < h; ++xx) {
      const int a = 2 * y * side + 2 * xx;
      out.col(y * h + xx) = T(0.25) * (x.col(a) + x.col(a + 1) + x.col(a + side) + x.col(a + side + 1));
    }
}

template <typename T>
void avg_pool_backward_add(const Mat<T>& dout, int side, Mat<T>& dx) {
  const int h = side / 2;
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < h; ++xx) {
      const int a = 2 * y * side + 2 * xx;
      const auto g = (T(0.25) * dout.col(y * h + xx)).eval();
      dx.col(a) += g;
      dx.col(a + 1) += g;
      dx.col(a + side) += g;
      dx.col(a + side + 1) += g;
    }
}

// Nearest 2x upsample of `x` (side s) into rows [0, x.rows()) of `out`.
template <typename T>
void upsample_into(const Mat<T>& x, int side, Mat<T>& out) {
  const int s2 = side * 2;
  for (int y = 0; y < s2; ++y)
    for (int xx = 0; xx < s2; ++xx) out.col(y * s2 + xx).head(x.rows()) = x.col((y / 2) * side + xx / 2);
}

template <typename T>
Mat<T> upsample_backward(const Mat<T>& dout, Eigen::Index rows, int side) {
  Mat<T> dx = Mat<T>::Zero(rows, static_cast<Eigen::Index>(side) * side);
  const int s2 = side * 2;
  for (int y = 0; y < s2; ++y)
    for (int xx = 0; xx < s2; ++xx) dx.col((y / 2) * side + xx / 2) += dout.col(y * s2 + xx).head(rows);
  return dx;
}

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

template <typename T>
Vec<T> silu(const Vec<T>& v) {
  return v.unaryExpr([](T x) { return x * sigmoid(x); });
}

template <typename T>
Vec<T> silu_grad(const Vec<T>& v) {
  return v.unaryExpr([](T x) {
    const T s = sigmoid(x);
    return s * (T(1) + x * (T(1) - s));
  });
}

}  // namespace

template <typename T>
class Denoiser<T>::Workspace {
 public:
  struct Block {
    Mat<T> cols;   // im2col of the block input
    Mat<T> nhat;   // group-normalised pre-activation
    Mat<T> f;      // after FiLM, before SiLU
    Mat<T> sig;    // logistic(f)
    Mat<T> a;      // block output
    Vec<T> inv_std;
    Vec<T> scale, shift;
  };
  std::array<Block, kBlocks> blocks;
  Mat<T> x0;       // 6 x 4096 network input
  Mat<T> p1, p2;   // pooled
  Mat<T> u1, u2;   // upsample + skip concatenations
  Mat<T> out_cols;
  Vec<T> cond, h1, a1, tsin, emb, u;
  Vec<T> du;       // gradient wrt silu(emb), accumulated across FiLM layers
};

template <typename T>
struct Denoiser<T>::Impl {
  DenoiserConfig cfg;
  std::vector<ParamBlock> layout;
  std::size_t count = 0;
  std::array<ConvSpec, kBlocks> blocks;
  ConvSpec out;
  std::size_t c1w = 0, c1b = 0, c2w = 0, c2b = 0, tw = 0, tb = 0;
  std::size_t skip = 0;  // 3x3 linear map from x_k straight to the output
  Mat<T> identity;  // 3 x 4096

  std::size_t add(const std::string& name, LayerKind kind, std::size_t size) {
    layout.push_back({name, kind, count, size});
    count += size;
    return layout.back().offset;
  }

  void add_conv(ConvSpec& s, const std::string& name, int cin, int cout, int side, bool film) {
    s.cin = cin;
    s.cout = cout;
    s.side = side;
    s.w = add(name + ".weight", LayerKind::kConv, static_cast<std::size_t>(cout) * 9 * cin);
    s.b = add(name + ".bias", LayerKind::kConv, static_cast<std::size_t>(cout));
    if (film) {
      s.fw = add(name + ".film.weight", LayerKind::kFilm, static_cast<std::size_t>(2 * cout) * cfg.embed_dim);
      s.fb = add(name + ".film.bias", LayerKind::kFilm, static_cast<std::size_t>(2 * cout));
    }
  }

  explicit Impl(const DenoiserConfig& c) : cfg(c) {
    cfg.validate();
    const int E = cfg.embed_dim;
    const auto [w1, w2, w3] = cfg.widths;
    c1w = add("cond.fc1.weight", LayerKind::kCondLinear, static_cast<std::size_t>(E) * cfg.cond_dim);
    c1b = add("cond.fc1.bias", LayerKind::kCondLinear, E);
    c2w = add("cond.fc2.weight", LayerKind::kCondLinear, static_cast<std::size_t>(E) * E);
    c2b = add("cond.fc2.bias", LayerKind::kCondLinear, E);
    tw = add("time.fc.weight", LayerKind::kTimeLinear, static_cast<std::size_t>(E) * cfg.time_dim);
    tb = add("time.fc.bias", LayerKind::kTimeLinear, E);
    add_conv(blocks[0], "enc64a", kInChannels, w1, 64, true);
    add_conv(blocks[1], "enc64b", w1, w1, 64, true);
    add_conv(blocks[2], "enc32", w1, w2, 32, true);
    add_conv(blocks[3], "enc16a", w2, w3, 16, true);
    add_conv(blocks[4], "enc16b", w3, w3, 16, true);
    add_conv(blocks[5], "dec32", w3 + w2, w2, 32, true);
    add_conv(blocks[6], "dec64", w2 + w1, w1, 64, true);
    add_conv(out, "out", w1, kOutChannels, 64, false);
    skip = add("skip.weight", LayerKind::kConv, kOutChannels * 3);

    const Lut3D id = identity_lut(kDiffusionLutSize);
    identity.resize(3, kSide * kSide);
    for (std::size_t i = 0; i < id.entries().size(); ++i) identity.data()[i] = static_cast<T>(id.entries()[i]);
  }

  void time_embedding(int k, Vec<T>& out) const {
    const int half = cfg.time_dim / 2;
    out.resize(cfg.time_dim);
    for (int i = 0; i < half; ++i) {
      const double freq = std::exp(-std::log(10000.0) * i / half);
      out[i] = static_cast<T>(std::sin(k * freq));
      out[half + i] = static_cast<T>(std::cos(k * freq));
    }
  }

  void block_forward(const ConvSpec& s, std::span<const T> p, const Mat<T>& in, typename Workspace::Block& b,
                     const Vec<T>& u) const {
    im2col(in, s.side, b.cols);
    const CMap<T> W(p.data() + s.w, s.cout, 9 * s.cin);
    const CVMap<T> bias(p.data() + s.b, s.cout);
    Mat<T> z = W * b.cols;
    z.colwise() += bias;

    const int G = cfg.groups;
    const int cg = s.cout / G;
    b.inv_std.resize(G);
    b.nhat.resize(z.rows(), z.cols());
    for (int g = 0; g < G; ++g) {
      auto zb = z.middleRows(g * cg, cg);
      const T mean = zb.mean();
      const T var = (zb.array() - mean).square().mean();
      const T inv = T(1) / std::sqrt(var + static_cast<T>(kGroupNormEps));
      b.inv_std[g] = inv;
      b.nhat.middleRows(g * cg, cg) = (zb.array() - mean) * inv;
    }

    const CMap<T> FW(p.data() + s.fw, 2 * s.cout, cfg.embed_dim);
    const CVMap<T> FB(p.data() + s.fb, 2 * s.cout);
    const Vec<T> film = FW * u + FB;
    b.scale = film.head(s.cout);
    b.shift = film.tail(s.cout);
    b.f = (b.nhat.array().colwise() * (b.scale.array() + T(1))).colwise() + b.shift.array();
    b.sig = b.f.array().logistic();
    b.a = b.f.cwiseProduct(b.sig);
  }

  // Returns d(input) unless `need_dx` is false.
  Mat<T> block_backward(const ConvSpec& s, std::span<const T> p, const Mat<T>& da,
                        typename Workspace::Block& b, Workspace& ws, std::span<T> grad,
                        bool need_dx) const {
    const Mat<T> df =
        (da.array() * b.sig.array() * (T(1) + b.f.array() * (T(1) - b.sig.array()))).matrix();
    // FiLM.
    Vec<T> dfilm(2 * s.cout);
    dfilm.head(s.cout) = df.cwiseProduct(b.nhat).rowwise().sum();
    dfilm.tail(s.cout) = df.rowwise().sum();
    MMap<T>(grad.data() + s.fw, 2 * s.cout, cfg.embed_dim).noalias() += dfilm * ws.u.transpose();
    MVMap<T>(grad.data() + s.fb, 2 * s.cout) += dfilm;
    ws.du.noalias() += CMap<T>(p.data() + s.fw, 2 * s.cout, cfg.embed_dim).transpose() * dfilm;

    // GroupNorm.
    const Mat<T> dn = (df.array().colwise() * (b.scale.array() + T(1))).matrix();
    Mat<T> dz(dn.rows(), dn.cols());
    const int G = cfg.groups;
    const int cg = s.cout / G;
    for (int g = 0; g < G; ++g) {
      const auto dnb = dn.middleRows(g * cg, cg);
      const auto nb = b.nhat.middleRows(g * cg, cg);
      const T m1 = dnb.mean();
      const T m2 = dnb.cwiseProduct(nb).mean();
      dz.middleRows(g * cg, cg) = b.inv_std[g] * (dnb.array() - m1 - nb.array() * m2);
    }

    // Conv.
    MMap<T>(grad.data() + s.w, s.cout, 9 * s.cin).noalias() += dz * b.cols.transpose();
    MVMap<T>(grad.data() + s.b, s.cout) += dz.rowwise().sum();
    if (!need_dx) return {};
    const Mat<T> dcols = CMap<T>(p.data() + s.w, s.cout, 9 * s.cin).transpose() * dz;
    Mat<T> dx = Mat<T>::Zero(s.cin, static_cast<Eigen::Index>(s.side) * s.side);
    col2im_add(dcols, s.side, dx);
    return dx;
  }
};

template <typename T>
Denoiser<T>::Denoiser(const DenoiserConfig& config) : impl_(std::make_unique<Impl>(config)) {}
template <typename T>
Denoiser<T>::~Denoiser() = default;
template <typename T>
Denoiser<T>::Denoiser(Denoiser&&) noexcept = default;
template <typename T>
Denoiser<T>& Denoiser<T>::operator=(Denoiser&&) noexcept = default;

template <typename T>
const DenoiserConfig& Denoiser<T>::config() const {
  return impl_->cfg;
}
template <typename T>
std::size_t Denoiser<T>::parameter_count() const {
  return impl_->count;
}
template <typename T>
const std::vector<ParamBlock>& Denoiser<T>::layout() const {
  return impl_->layout;
}

template <typename T>
std::vector<T> Denoiser<T>::init_params(std::uint64_t seed) const {
  std::vector<T> p(impl_->count, T(0));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  auto fill = [&](std::size_t off, std::size_t size, double stddev) {
    for (std::size_t i = 0; i < size; ++i) p[off + i] = static_cast<T>(n(rng) * stddev);
  };
  for (const ParamBlock& b : impl_->layout) {
    if (b.name.ends_with(".bias")) continue;
    if (b.offset == impl_->skip) {
      // Starts as the identity: at high noise levels eps is almost x_k itself.
      for (int c = 0; c < 3; ++c) p[b.offset + c * 3 + c] = T(1);
      continue;
    }
    double fan_in = 1.0;
    double gain = 1.0;
    switch (b.kind) {
      case LayerKind::kConv: {
        const bool is_out = b.name.starts_with("out.");
        const ConvSpec& s = is_out ? impl_->out : *std::find_if(impl_->blocks.begin(), impl_->blocks.end(),
                                                              [&](const ConvSpec& c) { return c.w == b.offset; });
        fan_in = 9.0 * s.cin;
        gain = is_out ? 1.0 : 2.0;
        break;
      }
      case LayerKind::kCondLinear:
        fan_in = b.name.starts_with("cond.fc1") ? impl_->cfg.cond_dim : impl_->cfg.embed_dim;
        break;
      case LayerKind::kTimeLinear:
        fan_in = impl_->cfg.time_dim;
        break;
      case LayerKind::kFilm:
        fan_in = impl_->cfg.embed_dim;
        gain = 0.25;
        break;
    }
    fill(b.offset, b.size, std::sqrt(gain / fan_in));
  }
  return p;
}

template <typename T>
std::shared_ptr<typename Denoiser<T>::Workspace> Denoiser<T>::make_workspace() const {
  return std::make_shared<Workspace>();
}

template <typename T>
void Denoiser<T>::predict(std::span<const T> params, const T* xk, const T* cond, int k, T* eps_out,
                          Workspace& ws) const {
  const Impl& m = *impl_;
  if (params.size() != m.count) {
    throw_invalid("denoiser: expected " + std::to_string(m.count) + " parameters, got " +
                  std::to_string(params.size()));
  }
  const T* p = params.data();
  const int E = m.cfg.embed_dim;
  const int HW = kSide * kSide;

  ws.cond = CVMap<T>(cond, m.cfg.cond_dim);
  ws.h1 = CMap<T>(p + m.c1w, E, m.cfg.cond_dim) * ws.cond + CVMap<T>(p + m.c1b, E);
  ws.a1 = silu<T>(ws.h1);
  m.time_embedding(k, ws.tsin);
  ws.emb = CMap<T>(p + m.c2w, E, E) * ws.a1 + CVMap<T>(p + m.c2b, E) +
           CMap<T>(p + m.tw, E, m.cfg.time_dim) * ws.tsin + CVMap<T>(p + m.tb, E);
  ws.u = silu<T>(ws.emb);

  ws.x0.resize(kInChannels, HW);
  ws.x0.topRows(3) = CMap<T>(xk, 3, HW);
  ws.x0.bottomRows(3) = m.identity;

  auto& B = ws.blocks;
  const auto [w1, w2, w3] = m.cfg.widths;
  m.block_forward(m.blocks[0], params, ws.x0, B[0], ws.u);
  m.block_forward(m.blocks[1], params, B[0].a, B[1], ws.u);
  avg_pool(B[1].a, 64, ws.p1);
  m.block_forward(m.blocks[2], params, ws.p1, B[2], ws.u);
  avg_pool(B[2].a, 32, ws.p2);
  m.block_forward(m.blocks[3], params, ws.p2, B[3], ws.u);
  m.block_forward(m.blocks[4], params, B[3].a, B[4], ws.u);
  ws.u1.resize(w3 + w2, 32 * 32);
  upsample_into(B[4].a, 16, ws.u1);
  ws.u1.bottomRows(w2) = B[2].a;
  m.block_forward(m.blocks[5], params, ws.u1, B[5], ws.u);
  ws.u2.resize(w2 + w1, HW);
  upsample_into(B[5].a, 32, ws.u2);
  ws.u2.bottomRows(w1) = B[1].a;
  m.block_forward(m.blocks[6], params, ws.u2, B[6], ws.u);

  im2col(B[6].a, 64, ws.out_cols);
  MMap<T> out(eps_out, kOutChannels, HW);
  out.noalias() = CMap<T>(p + m.out.w, kOutChannels, 9 * w1) * ws.out_cols;
  out.colwise() += CVMap<T>(p + m.out.b, kOutChannels);
  out.noalias() += CMap<T>(p + m.skip, kOutChannels, 3) * ws.x0.topRows(3);
}

template <typename T>
void Denoiser<T>::backward(std::span<const T> params, const T* d_eps, Workspace& ws, std::span<T> grad) const {
  const Impl& m = *impl_;
  if (grad.size() != m.count) throw_invalid("denoiser: gradient buffer has the wrong size");
  const T* p = params.data();
  const int E = m.cfg.embed_dim;
  const int HW = kSide * kSide;
  const auto [w1, w2, w3] = m.cfg.widths;
  auto& B = ws.blocks;
  ws.du = Vec<T>::Zero(E);

  const CMap<T> dout(d_eps, kOutChannels, HW);
  MMap<T>(grad.data() + m.out.w, kOutChannels, 9 * w1).noalias() += dout * ws.out_cols.transpose();
  MVMap<T>(grad.data() + m.out.b, kOutChannels) += dout.rowwise().sum();
  MMap<T>(grad.data() + m.skip, kOutChannels, 3).noalias() += dout * ws.x0.topRows(3).transpose();
  Mat<T> d6 = Mat<T>::Zero(w1, HW);
  col2im_add<T>(CMap<T>(p + m.out.w, kOutChannels, 9 * w1).transpose() * dout, 64, d6);

  const Mat<T> du2 = m.block_backward(m.blocks[6], params, d6, B[6], ws, grad, true);
  Mat<T> d1 = du2.bottomRows(w1);
  const Mat<T> d5 = upsample_backward<T>(du2, w2, 32);
  const Mat<T> du1 = m.block_backward(m.blocks[5], params, d5, B[5], ws, grad, true);
  Mat<T> d2 = du1.bottomRows(w2);
  const Mat<T> d4 = upsample_backward<T>(du1, w3, 16);
  const Mat<T> d3 = m.block_backward(m.blocks[4], params, d4, B[4], ws, grad, true);
  const Mat<T> dp2 = m.block_backward(m.blocks[3], params, d3, B[3], ws, grad, true);
  avg_pool_backward_add(dp2, 32, d2);
  const Mat<T> dp1 = m.block_backward(m.blocks[2], params, d2, B[2], ws, grad, true);
  avg_pool_backward_add(dp1, 64, d1);
  const Mat<T> d0 = m.block_backward(m.blocks[1], params, d1, B[1], ws, grad, true);
  m.block_backward(m.blocks[0], params, d0, B[0], ws, grad, false);

  // Embedding paths.
  const Vec<T> demb = ws.du.cwiseProduct(silu_grad<T>(ws.emb));
  MMap<T>(grad.data() + m.tw, E, m.cfg.time_dim).noalias() += demb * ws.tsin.transpose();
  MVMap<T>(grad.data() + m.tb, E) += demb;
  MMap<T>(grad.data() + m.c2w, E, E).noalias() += demb * ws.a1.transpose();
  MVMap<T>(grad.data() + m.c2b, E) += demb;
  const Vec<T> dh1 = (CMap<T>(p + m.c2w, E, E).transpose() * demb).cwiseProduct(silu_grad<T>(ws.h1));
  MMap<T>(grad.data() + m.c1w, E, m.cfg.cond_dim).noalias() += dh1 * ws.cond.transpose();
  MVMap<T>(grad.data() + m.c1b, E) += dh1;
}

template class Denoiser<float>;
template class Denoiser<double>;

template <typename T>
T sample_loss(const Denoiser<T>& net, std::span<const T> params, const T* x0, const T* cond, int k,
              const T* eps, const NoiseSchedule& sched, typename Denoiser<T>::Workspace& ws, std::span<T> grad,
              T grad_scale) {
  if (k < 1 || k > sched.steps) throw_invalid("sample_loss: step out of range");
  constexpr std::size_t n = DeltaImage::kValues;
  const T a = static_cast<T>(std::sqrt(sched.alpha_bar(k)));
  const T b = static_cast<T>(std::sqrt(1.0 - sched.alpha_bar(k)));
  std::vector<T> xk(n), pred(n);
  for (std::size_t i = 0; i < n; ++i) xk[i] = a * x0[i] + b * eps[i];
  net.predict(params, xk.data(), cond, k, pred.data(), ws);
  T loss = T(0);
  for (std::size_t i = 0; i < n; ++i) {
    const T d = pred[i] - eps[i];
    loss += d * d;
    pred[i] = d;  // reused as the residual
  }
  loss /= static_cast<T>(n);
  if (!grad.empty()) {
    const T g = T(2) * grad_scale / static_cast<T>(n);
    for (T& v : pred) v *= g;
    net.backward(params, pred.data(), ws, grad);
  }
  return loss;
}

template float sample_loss<float>(const Denoiser<float>&, std::span<const float>, const float*, const float*, int,
                                  const float*, const NoiseSchedule&, Denoiser<float>::Workspace&,
                                  std::span<float>, float);
template double sample_loss<double>(const Denoiser<double>&, std::span<const double>, const double*,
                                    const double*, int, const double*, const NoiseSchedule&,
                                    Denoiser<double>::Workspace&, std::span<double>, double);

std::vector<float> normalize_condition(const ConditionVector& c, std::span<const double> scale) {
  if (c.values.size() != scale.size()) {
    throw_invalid("condition has " + std::to_string(c.values.size()) + " values, model expects " +
                  std::to_string(scale.size()));
  }
  std::vector<float> out(c.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(std::clamp(c.values[i] / scale[i], -kCondClip, kCondClip));
  }
  return out;
}

DeltaImage denoiser_predict(const DeltaImage& xk, const ConditionVector& cond, int k,
                            const DenoiserParams& params) {
  if (xk.values.size() != DeltaImage::kValues) throw_invalid("denoiser_predict: bad raster size");
  const Denoiser<float> net(params.config);
  const std::vector<float> c = normalize_condition(cond, params.cond_scale);
  std::vector<float> x(xk.values.begin(), xk.values.end());
  std::vector<float> out(DeltaImage::kValues);
  auto ws = net.make_workspace();
  net.predict(params.weights, x.data(), c.data(), k, out.data(), *ws);
  DeltaImage img;
  std::copy(out.begin(), out.end(), img.values.begin());
  return img;
}

}  // namespace gradeforge
