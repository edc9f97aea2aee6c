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

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <random>

#include "gradeforge/checkpoint.hpp"
#include "gradeforge/cube_io.hpp"
#include "gradeforge/error.hpp"
#include "gradeforge/frame_io.hpp"
#include "gradeforge/service.hpp"

namespace gradeforge {
namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::kCreated: return "created";
    case SessionStatus::kLoaded: return "loaded";
    case SessionStatus::kGraded: return "graded";
    case SessionStatus::kError: return "error";
  }
  return "?";
}

namespace {

SessionStatus status_from(const std::string& s) {
  if (s == "created") return SessionStatus::kCreated;
  if (s == "loaded") return SessionStatus::kLoaded;
  if (s == "graded") return SessionStatus::kGraded;
  if (s == "error") return SessionStatus::kError;
  throw Error(ErrorKind::kIo, "session.json: unknown status '" + s + "'");
}

bool valid_id(const std::string& id) {
  return id.size() == 32 && std::all_of(id.begin(), id.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

// Stack LUTs are stored bit-exactly: "GFLT" | u32 size | f32 dmin[3] | f32
// dmax[3] | f32 entries, little-endian.
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw Error(ErrorKind::kIo, "stack LUT file truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[pos + i]) << (8 * i);
  pos += 4;
  return v;
}

std::vector<std::uint8_t> encode_lut(const Lut3D& lut) {
  std::vector<std::uint8_t> out{'G', 'F', 'L', 'T'};
  put_u32(out, static_cast<std::uint32_t>(lut.size()));
  for (float f : lut.domain_min()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  for (float f : lut.domain_max()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  for (float f : lut.entries()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

Lut3D decode_lut(const std::vector<std::uint8_t>& in) {
  if (in.size() < 4 || std::memcmp(in.data(), "GFLT", 4) != 0) throw Error(ErrorKind::kIo, "bad stack LUT file");
  std::size_t pos = 4;
  const auto size = static_cast<int>(get_u32(in, pos));
  if (size < 2 || size > 256) throw Error(ErrorKind::kIo, "bad stack LUT size");
  Rgb lo{}, hi{};
  for (float& f : lo) f = std::bit_cast<float>(get_u32(in, pos));
  for (float& f : hi) f = std::bit_cast<float>(get_u32(in, pos));
  std::vector<float> e(static_cast<std::size_t>(size) * size * size * 3);
  for (float& f : e) f = std::bit_cast<float>(get_u32(in, pos));
  if (pos != in.size()) throw Error(ErrorKind::kIo, "stack LUT file has trailing bytes");
  return Lut3D(size, std::move(e), lo, hi);
}

std::vector<std::uint8_t> read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_file_atomic(const fs::path& p, const void* data, std::size_t size) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
  }
  fs::rename(tmp, p);
}

std::string random_id() {
  std::random_device rd;
  std::uint64_t a = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::uint64_t b = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(a),
                static_cast<unsigned long long>(b));
  return buf;
}

std::uint64_t seed_from_id(const std::string& id) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (char c : id) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ull;
  return h;
}

}  // namespace

struct GradingService::Session {
  std::mutex mu;
  std::string id;
  fs::path dir;
  SessionStatus status = SessionStatus::kCreated;
  std::uint64_t seed = 0;
  std::uint64_t revision = 0;
  bool has_input = false;
  bool has_reference = false;
  std::shared_ptr<const VideoClip> input;
  std::shared_ptr<const VideoClip> reference;
  std::optional<KeyFramePair> key_pair;
  std::optional<GradingSession> grading;
};

GradingService::GradingService(ServiceOptions options, std::shared_ptr<const PromptCatalog> catalog)
    : options_(std::move(options)), catalog_(std::move(catalog)) {
  if (!catalog_) throw_invalid("GradingService needs a catalog");
  fs::create_directories(options_.store);
}

GradingService::~GradingService() = default;

void GradingService::persist(const Session& s) const {
  const fs::path stack_dir = s.dir / "stack";
  fs::create_directories(stack_dir);
  json j;
  j["id"] = s.id;
  j["status"] = to_string(s.status);
  j["seed"] = s.seed;
  j["revision"] = s.revision;
  j["has_input"] = s.has_input;
  j["has_reference"] = s.has_reference;
  j["key_pair"] = nullptr;
  if (s.key_pair) {
    j["key_pair"] = {{"input_index", s.key_pair->input_index},
                     {"reference_index", s.key_pair->reference_index},
                     {"similarity", s.key_pair->similarity}};
  }
  j["stack"] = json::array();
  j["history"] = json::array();
  std::size_t kept = 0;
  if (s.grading) {
    const auto& stack = s.grading->stack();
    for (std::size_t i = 0; i < stack.size(); ++i) {
      const std::string file = std::to_string(i) + ".lut";
      const auto bytes = encode_lut(stack[i].lut);
      write_file_atomic(stack_dir / file, bytes.data(), bytes.size());
      j["stack"].push_back({{"source", stack[i].source == StackEntry::Source::kGenerated ? "generated" : "catalog"},
                            {"name", stack[i].name},
                            {"file", file}});
    }
    kept = stack.size();
    for (const auto& h : s.grading->history()) {
      j["history"].push_back({{"prompt", h.prompt},
                              {"matched", h.matched},
                              {"similarity", h.similarity},
                              {"runner_up", h.runner_up},
                              {"runner_up_similarity", h.runner_up_similarity},
                              {"timestamp_ms", h.timestamp_ms}});
    }
  }
  const std::string text = j.dump(2);
  write_file_atomic(s.dir / "session.json", text.data(), text.size());
  // Only after session.json stops referencing them.
  for (const auto& e : fs::directory_iterator(stack_dir)) {
    const std::string stem = e.path().stem().string();
    if (e.path().extension() == ".lut" && !stem.empty() &&
        std::all_of(stem.begin(), stem.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
        std::stoull(stem) >= kept) {
      fs::remove(e.path());
    }
  }
}

std::string GradingService::create_session() {
  auto s = std::make_shared<Session>();
  std::lock_guard lock(sessions_mu_);
  do {
    s->id = random_id();
  } while (sessions_.contains(s->id) || fs::exists(options_.store / s->id));
  s->dir = options_.store / s->id;
  s->seed = seed_from_id(s->id);
  fs::create_directories(s->dir);
  persist(*s);
  sessions_[s->id] = s;
  return s->id;
}

std::shared_ptr<GradingService::Session> GradingService::find(const std::string& id) {
  std::lock_guard lock(sessions_mu_);
  if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
  const fs::path dir = options_.store / id;
  if (!valid_id(id) || !fs::exists(dir / "session.json")) {
    throw Error(ErrorKind::kNotFound, "unknown session '" + id + "'");
  }
  auto s = std::make_shared<Session>();
  s->dir = dir;
  const auto bytes = read_file(dir / "session.json");
  try {
    const json j = json::parse(bytes.begin(), bytes.end());
    s->id = j.at("id").get<std::string>();
    s->status = status_from(j.at("status").get<std::string>());
    s->seed = j.at("seed").get<std::uint64_t>();
    s->revision = j.at("revision").get<std::uint64_t>();
    s->has_input = j.at("has_input").get<bool>();
    s->has_reference = j.at("has_reference").get<bool>();
    if (!j.at("key_pair").is_null()) {
      const json& k = j["key_pair"];
      s->key_pair = KeyFramePair{k.at("input_index").get<std::size_t>(), k.at("reference_index").get<std::size_t>(),
                                 k.at("similarity").get<double>()};
    }
    load_clips(*s);
    const json& stack = j.at("stack");
    if (!stack.empty()) {
      if (!s->input) throw Error(ErrorKind::kIo, "graded session without input frames");
      std::vector<StackEntry> entries;
      for (const json& e : stack) {
        StackEntry se;
        se.source = e.at("source").get<std::string>() == "generated" ? StackEntry::Source::kGenerated
                                                                      : StackEntry::Source::kCatalog;
        se.name = e.at("name").get<std::string>();
        se.lut = decode_lut(read_file(dir / "stack" / e.at("file").get<std::string>()));
        entries.push_back(std::move(se));
      }
      GradingSession g(s->input, entries.front().lut, entries.front().name);
      const json& hist = j.at("history");
      if (hist.size() + 1 != entries.size()) throw Error(ErrorKind::kIo, "history does not match the stack");
      for (std::size_t i = 1; i < entries.size(); ++i) {
        const json& h = hist[i - 1];
        g.push(entries[i], FeedbackRecord{h.at("prompt").get<std::string>(), h.at("matched").get<std::string>(),
                                          h.at("similarity").get<double>(), h.at("runner_up").get<std::string>(),
                                          h.at("runner_up_similarity").get<double>(),
                                          h.at("timestamp_ms").get<std::int64_t>()});
      }
      s->grading = std::move(g);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kIo, "corrupt session " + id + ": " + e.what());
  }
  sessions_[id] = s;
  return s;
}

void GradingService::load_clips(Session& s) const {
  if (s.has_input) s.input = std::make_shared<const VideoClip>(load_clip(s.dir / "input"));
  if (s.has_reference) s.reference = std::make_shared<const VideoClip>(load_clip(s.dir / "reference"));
}

namespace {

SessionStatus upload_status(bool in, bool ref) {
  return in && ref ? SessionStatus::kLoaded : SessionStatus::kCreated;
}

}  // namespace

void GradingService::upload_input(const std::string& id, VideoClip clip) {
  clip.validate();
  auto s = find(id);
  std::lock_guard lock(s->mu);
  save_clip(clip, s->dir / "input");
  // Reload so the in-memory copy is exactly what a restart would see.
  s->input = std::make_shared<const VideoClip>(load_clip(s->dir / "input"));
  s->has_input = true;
  s->grading.reset();
  s->key_pair.reset();
  s->status = upload_status(s->has_input, s->has_reference);
  ++s->revision;
  persist(*s);
}

void GradingService::upload_reference(const std::string& id, VideoClip clip) {
  clip.validate();
  auto s = find(id);
  std::lock_guard lock(s->mu);
  save_clip(clip, s->dir / "reference");
  s->reference = std::make_shared<const VideoClip>(load_clip(s->dir / "reference"));
  s->has_reference = true;
  s->grading.reset();
  s->key_pair.reset();
  s->status = upload_status(s->has_input, s->has_reference);
  ++s->revision;
  persist(*s);
}

std::shared_ptr<const DiffusionModel> GradingService::model() {
  std::lock_guard lock(model_mu_);
  if (!model_) {
    if (options_.checkpoint.empty() || !fs::exists(options_.checkpoint)) {
      throw Error(ErrorKind::kUnavailable, "no model checkpoint at '" + options_.checkpoint.string() + "'");
    }
    model_ = std::make_shared<const DiffusionModel>(load_checkpoint(options_.checkpoint));
  }
  return model_;
}

bool GradingService::has_model() {
  try {
    model();
    return true;
  } catch (const Error&) {
    return false;
  }
}

GradeResult GradingService::grade(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  if (!s->has_input || !s->has_reference) {
    throw Error(ErrorKind::kConflict, std::string("session needs ") +
                                          (!s->has_input ? "an input clip" : "a reference clip") +
                                          " before grading");
  }
  const auto m = model();
  const StatisticalStyleExtractor extractor;
  const FrameEmbedder embed = [&](const Frame& f) { return extractor.extract(f).values; };
  const KeyFramePair pair = select_key_frames(*s->input, *s->reference, embed, options_.sample_hz);
  const Lut3D lut = generate_lut(s->input->frames[pair.input_index], s->reference->frames[pair.reference_index], *m,
                                 s->seed, options_.ddim_steps, extractor);
  s->grading.emplace(s->input, lut, "generated");
  s->key_pair = pair;
  s->status = SessionStatus::kGraded;
  ++s->revision;
  persist(*s);

  GradeResult r;
  r.key_pair = pair;
  r.revision = s->revision;
  const std::size_t n = s->input->size();
  std::vector<std::size_t> idx{0, pair.input_index, n / 2, n - 1};
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  r.preview_indices = idx;
  return r;
}

namespace {

void require_graded(const std::optional<GradingSession>& g) {
  if (!g) throw Error(ErrorKind::kConflict, "session has not been graded");
}

}  // namespace

PromptMatch GradingService::feedback(const std::string& id, const std::string& prompt) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  require_graded(s->grading);
  PromptMatch match;
  GradingSession next = apply_feedback(*s->grading, prompt, *catalog_, wall_clock_ms, &match);
  s->grading = std::move(next);
  ++s->revision;
  persist(*s);
  return match;
}

void GradingService::undo(const std::string& id, std::size_t to_index) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  require_graded(s->grading);
  GradingSession next = s->grading->undo(to_index);
  s->grading = std::move(next);
  ++s->revision;
  persist(*s);
}

std::vector<std::uint8_t> GradingService::preview_png(const std::string& id, std::size_t frame) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  require_graded(s->grading);
  if (frame >= s->input->size()) {
    throw Error(ErrorKind::kNotFound, "frame " + std::to_string(frame) + " out of range (clip has " +
                                          std::to_string(s->input->size()) + ")");
  }
  return encode_png(s->grading->graded_frame(frame));
}

std::string GradingService::export_cube(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  require_graded(s->grading);
  return write_cube(s->grading->current_lut(), "gradeforge " + s->id);
}

std::vector<std::uint8_t> GradingService::export_clip(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  require_graded(s->grading);
  const VideoClip graded = s->grading->graded_clip(options_.workers);
  std::vector<TarEntry> entries;
  char name[32];
  for (std::size_t i = 0; i < graded.frames.size(); ++i) {
    std::snprintf(name, sizeof name, "%06zu.png", i + 1);
    entries.push_back({name, encode_png(graded.frames[i])});
  }
  const json meta{{"fps", graded.fps},
                  {"frame_count", graded.frames.size()},
                  {"width", graded.frames.front().width()},
                  {"height", graded.frames.front().height()}};
  const std::string text = meta.dump(2) + "\n";
  entries.push_back({kClipSidecar, std::vector<std::uint8_t>(text.begin(), text.end())});
  return make_tar(entries);
}

SessionStatus GradingService::status(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  return s->status;
}

std::string GradingService::describe(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  json j;
  j["id"] = s->id;
  j["status"] = to_string(s->status);
  j["revision"] = s->revision;
  j["seed"] = s->seed;
  j["input_frames"] = s->input ? s->input->size() : 0;
  j["reference_frames"] = s->reference ? s->reference->size() : 0;
  j["key_pair"] = nullptr;
  if (s->key_pair) {
    j["key_pair"] = {{"input_index", s->key_pair->input_index},
                     {"reference_index", s->key_pair->reference_index},
                     {"similarity", s->key_pair->similarity}};
  }
  j["stack"] = json::array();
  j["history"] = json::array();
  if (s->grading) {
    for (const auto& e : s->grading->stack()) {
      j["stack"].push_back(
          {{"source", e.source == StackEntry::Source::kGenerated ? "generated" : "catalog"}, {"name", e.name}});
    }
    for (const auto& h : s->grading->history()) {
      j["history"].push_back({{"prompt", h.prompt},
                              {"matched", h.matched},
                              {"similarity", h.similarity},
                              {"runner_up", h.runner_up},
                              {"runner_up_similarity", h.runner_up_similarity},
                              {"timestamp_ms", h.timestamp_ms}});
    }
  }
  return j.dump();
}

}  // namespace gradeforge
