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

#include "gradeforge/retouch.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "gradeforge/cube_io.hpp"
#include "gradeforge/error.hpp"

namespace gradeforge {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (c >= 0x80 || std::isalnum(c)) {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

TfIdfEmbedder::TfIdfEmbedder(const std::vector<std::string>& documents) {
  if (documents.empty()) throw_invalid("TfIdfEmbedder: no documents");
  std::vector<std::size_t> df;
  for (const auto& doc : documents) {
    const auto toks = tokenize(doc);
    std::set<std::string> seen(toks.begin(), toks.end());
    for (const auto& t : seen) {
      auto [it, inserted] = vocab_.try_emplace(t, df.size());
      if (inserted) df.push_back(0);
      ++df[it->second];
    }
  }
  const double n = static_cast<double>(documents.size());
  idf_.resize(df.size());
  for (std::size_t i = 0; i < df.size(); ++i) {
    idf_[i] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[i]))) + 1.0;
  }
}

std::optional<std::size_t> TfIdfEmbedder::term_index(const std::string& term) const {
  auto it = vocab_.find(term);
  if (it == vocab_.end()) return std::nullopt;
  return it->second;
}

std::vector<double> TfIdfEmbedder::embed(std::string_view text) const {
  std::vector<double> v(vocab_.size(), 0.0);
  bool any = false;
  for (const auto& t : tokenize(text)) {
    auto it = vocab_.find(t);
    if (it == vocab_.end()) continue;
    v[it->second] += 1.0;
    any = true;
  }
  if (!any) {
    throw Error(ErrorKind::kUnmatchablePrompt,
                "prompt has no terms in the catalog vocabulary: '" + std::string(text) + "'");
  }
  double norm = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] *= idf_[i];
    norm += v[i] * v[i];
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(d / std::sqrt(na * nb), -1.0, 1.0);
}

}  // namespace

PromptCatalog::PromptCatalog(std::vector<Record> records,
                             std::shared_ptr<const TextEmbedder> embedder,
                             double low_confidence_threshold)
    : embedder_(std::move(embedder)), low_confidence_threshold_(low_confidence_threshold) {
  if (records.empty()) throw Error(ErrorKind::kInvalidCatalog, "catalog has no entries");
  std::set<std::string> names;
  for (const auto& r : records) {
    if (r.description.empty()) throw Error(ErrorKind::kInvalidCatalog, r.name + ": empty description");
    if (!names.insert(r.name).second) throw Error(ErrorKind::kInvalidCatalog, "duplicate name " + r.name);
  }
  if (!embedder_) {
    std::vector<std::string> docs;
    for (const auto& r : records) docs.push_back(r.description);
    embedder_ = std::make_shared<TfIdfEmbedder>(docs);
  }
  for (auto& r : records) {
    LutCatalogEntry e{std::move(r.name), std::move(r.lut), std::move(r.description), {}};
    e.embedding = embedder_->embed(e.description);
    entries_.push_back(std::move(e));
  }
}

PromptCatalog PromptCatalog::load(const std::filesystem::path& dir, double low_confidence_threshold) {
  const auto sidecar = dir / kDescriptionSidecar;
  std::ifstream in(sidecar);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + sidecar.string());
  std::vector<Record> records;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& item : j) {
      Record r;
      r.name = item.at("name").get<std::string>();
      r.description = item.at("description").get<std::string>();
      r.lut = read_cube(dir / (r.name + ".cube"));
      records.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kInvalidCatalog, sidecar.string() + ": " + e.what());
  }
  return PromptCatalog(std::move(records), nullptr, low_confidence_threshold);
}

const LutCatalogEntry* PromptCatalog::find(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return &e;
  return nullptr;
}

PromptMatch PromptCatalog::match(std::string_view prompt) const {
  const auto q = embedder_->embed(prompt);
  PromptMatch m;
  std::optional<std::size_t> best, second;
  std::vector<double> sims(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    sims[i] = cosine(q, entries_[i].embedding);
    if (!best || sims[i] > sims[*best]) {
      second = best;
      best = i;
    } else if (!second || sims[i] > sims[*second]) {
      second = i;
    }
  }
  m.index = *best;
  m.name = entries_[*best].name;
  m.similarity = sims[*best];
  if (second) {
    m.runner_up = entries_[*second].name;
    m.runner_up_similarity = sims[*second];
  }
  m.low_confidence = m.similarity < low_confidence_threshold_;
  return m;
}

PromptMatch match_prompt(std::string_view prompt, const PromptCatalog& catalog) {
  return catalog.match(prompt);
}

GradingSession::GradingSession(std::shared_ptr<const VideoClip> original, Lut3D initial,
                               std::string initial_name)
    : original_(std::move(original)) {
  if (!original_) throw_invalid("GradingSession: no input clip");
  original_->validate();
  stack_.push_back({StackEntry::Source::kGenerated, std::move(initial_name), std::move(initial)});
}

Lut3D GradingSession::current_lut() const {
  Lut3D lut = stack_.front().lut;
  for (std::size_t i = 1; i < stack_.size(); ++i) lut = compose_luts(lut, stack_[i].lut);
  return lut;
}

VideoClip GradingSession::graded_clip(unsigned workers) const {
  return apply_lut_clip(current_lut(), *original_, workers);
}

Frame GradingSession::graded_frame(std::size_t index) const {
  if (index >= original_->frames.size()) {
    throw Error(ErrorKind::kNotFound, "frame " + std::to_string(index) + " out of range");
  }
  return apply_lut(current_lut(), original_->frames[index]);
}

GradingSession GradingSession::undo(std::size_t to_index) const {
  if (to_index > history_.size()) {
    throw Error(ErrorKind::kNotFound, "undo index " + std::to_string(to_index) +
                                          " beyond history of " + std::to_string(history_.size()));
  }
  GradingSession out = *this;
  out.stack_.resize(1 + to_index);
  out.history_.resize(to_index);
  return out;
}

void GradingSession::push(StackEntry entry, FeedbackRecord record) {
  stack_.push_back(std::move(entry));
  history_.push_back(std::move(record));
}

std::int64_t wall_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

GradingSession apply_feedback(const GradingSession& session, std::string_view prompt,
                              const PromptCatalog& catalog, const GradingSession::Clock& clock,
                              PromptMatch* match_out) {
  const PromptMatch m = catalog.match(prompt);
  const LutCatalogEntry& entry = catalog.entries()[m.index];
  if (entry.lut.size() != session.stack().front().lut.size()) {
    throw_invalid("catalog LUT '" + entry.name + "' size differs from the session grade");
  }
  GradingSession next = session;
  next.push({StackEntry::Source::kCatalog, entry.name, entry.lut},
            {std::string(prompt), m.name, m.similarity, m.runner_up, m.runner_up_similarity,
             clock ? clock() : 0});
  if (match_out) *match_out = m;
  return next;
}

}  // namespace gradeforge
