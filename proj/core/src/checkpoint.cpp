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

#include "gradeforge/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gradeforge/error.hpp"

namespace gradeforge {
namespace {

constexpr char kMagic[4] = {'G', 'F', 'C', 'K'};

class Writer {
 public:
  template <typename U>
  void put(U v) {
    using Bits = std::conditional_t<sizeof(U) == 8, std::uint64_t, std::uint32_t>;
    const auto bits = std::bit_cast<Bits>(v);
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes(b) {}
  template <typename U>
  U get() {
    using Bits = std::conditional_t<sizeof(U) == 8, std::uint64_t, std::uint32_t>;
    if (pos + sizeof(U) > bytes.size()) throw Error(ErrorKind::kIo, "checkpoint: truncated");
    Bits bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<Bits>(bytes[pos + i]) << (8 * i);
    pos += sizeof(U);
    return std::bit_cast<U>(bits);
  }
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const DiffusionModel& model) {
  const DenoiserParams& p = model.params;
  Writer w;
  w.out.assign(kMagic, kMagic + 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  for (int v : p.config.widths) w.put<std::int32_t>(v);
  w.put<std::int32_t>(p.config.groups);
  w.put<std::int32_t>(p.config.embed_dim);
  w.put<std::int32_t>(p.config.time_dim);
  w.put<std::int32_t>(p.config.cond_dim);
  w.put<std::int32_t>(model.schedule.steps);
  w.put<double>(model.schedule.beta_start);
  w.put<double>(model.schedule.beta_end);
  w.put<double>(p.delta_scale);
  w.put<std::uint64_t>(p.cond_scale.size());
  for (double s : p.cond_scale) w.put<double>(s);
  w.put<std::uint64_t>(p.weights.size());
  for (float f : p.weights) w.put<float>(f);
  return std::move(w.out);
}

DiffusionModel deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorKind::kIo, "checkpoint: bad magic");
  }
  Reader r(bytes);
  r.pos = 4;
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::kIo, "checkpoint: unsupported version " + std::to_string(version));
  }
  DiffusionModel m;
  DenoiserConfig& c = m.params.config;
  for (int& v : c.widths) v = r.get<std::int32_t>();
  c.groups = r.get<std::int32_t>();
  c.embed_dim = r.get<std::int32_t>();
  c.time_dim = r.get<std::int32_t>();
  c.cond_dim = r.get<std::int32_t>();
  const int K = r.get<std::int32_t>();
  const double b0 = r.get<double>();
  const double b1 = r.get<double>();
  m.params.delta_scale = r.get<double>();
  if (!(m.params.delta_scale > 0.0) || !std::isfinite(m.params.delta_scale)) {
    throw Error(ErrorKind::kIo, "checkpoint: bad delta scale");
  }
  try {
    c.validate();
    m.schedule = make_schedule(K, b0, b1);
  } catch (const Error& e) {
    throw Error(ErrorKind::kIo, std::string("checkpoint: ") + e.what());
  }
  const auto ns = r.get<std::uint64_t>();
  if (ns != static_cast<std::uint64_t>(c.cond_dim)) throw Error(ErrorKind::kIo, "checkpoint: cond_scale size mismatch");
  m.params.cond_scale.resize(ns);
  for (double& s : m.params.cond_scale) {
    s = r.get<double>();
    if (!(s > 0.0)) throw Error(ErrorKind::kIo, "checkpoint: non-positive condition scale");
  }
  const auto nw = r.get<std::uint64_t>();
  const std::size_t expected = Denoiser<float>(c).parameter_count();
  if (nw != expected) {
    throw Error(ErrorKind::kIo, "checkpoint: " + std::to_string(nw) + " weights, architecture needs " +
                                    std::to_string(expected));
  }
  m.params.weights.resize(nw);
  for (float& f : m.params.weights) f = r.get<float>();
  if (r.pos != bytes.size()) throw Error(ErrorKind::kIo, "checkpoint: trailing bytes");
  return m;
}

void save_checkpoint(const std::filesystem::path& path, const DiffusionModel& model) {
  const auto bytes = serialize_checkpoint(model);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::kIo, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

DiffusionModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes(std::istreambuf_iterator<char>(in), {});
  try {
    return deserialize_checkpoint(bytes);
  } catch (const Error& e) {
    throw Error(ErrorKind::kIo, path.string() + ": " + e.what());
  }
}

}  // namespace gradeforge
