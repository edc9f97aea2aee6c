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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gradeforge/frame.hpp"
#include "gradeforge/lut.hpp"

namespace gradeforge {

/// Lowercases ASCII, turns every non-alphanumeric ASCII byte into a separator
/// and splits on whitespace. Bytes >= 0x80 are kept inside tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Text -> unit-length term-weight vector. Swappable for a learned encoder.
class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  /// Throws kUnmatchablePrompt when nothing in `text` is embeddable.
  virtual std::vector<double> embed(std::string_view text) const = 0;
};

/// TF-IDF over a fixed document set. tf is the raw count, idf is
/// ln((1 + N) / (1 + df)) + 1, and vectors are L2-normalised. Tokens outside
/// the vocabulary are ignored.
class TfIdfEmbedder final : public TextEmbedder {
 public:
  explicit TfIdfEmbedder(const std::vector<std::string>& documents);

  std::vector<double> embed(std::string_view text) const override;

  std::size_t vocabulary_size() const { return vocab_.size(); }
  std::optional<std::size_t> term_index(const std::string& term) const;
  double idf(std::size_t term) const { return idf_.at(term); }

 private:
  std::map<std::string, std::size_t> vocab_;
  std::vector<double> idf_;
};

struct LutCatalogEntry {
  std::string name;
  Lut3D lut;
  std::string description;
  std::vector<double> embedding;
};

inline constexpr double kLowConfidenceThreshold = 0.15;

struct PromptMatch {
  std::string name;
  std::size_t index = 0;
  double similarity = 0.0;
  std::string runner_up;  // empty for a single-entry catalog
  double runner_up_similarity = 0.0;
  bool low_confidence = false;
};

/// Described LUT presets. Immutable after construction, safe to share.
class PromptCatalog {
 public:
  struct Record {
    std::string name;
    Lut3D lut;
    std::string description;
  };

  /// Builds a TF-IDF embedder over the descriptions unless one is supplied.
  explicit PromptCatalog(std::vector<Record> records,
                         std::shared_ptr<const TextEmbedder> embedder = nullptr,
                         double low_confidence_threshold = kLowConfidenceThreshold);

  /// Reads `descriptions.json` ([{"name", "description"}]) and `<name>.cube`
  /// files from `dir`.
  static PromptCatalog load(const std::filesystem::path& dir,
                            double low_confidence_threshold = kLowConfidenceThreshold);

  const std::vector<LutCatalogEntry>& entries() const { return entries_; }
  const LutCatalogEntry* find(std::string_view name) const;
  const TextEmbedder& embedder() const { return *embedder_; }

  /// Argmax cosine over entries; ties resolved by catalog order.
  PromptMatch match(std::string_view prompt) const;

 private:
  std::vector<LutCatalogEntry> entries_;
  std::shared_ptr<const TextEmbedder> embedder_;
  double low_confidence_threshold_;
};

inline constexpr const char* kDescriptionSidecar = "descriptions.json";

PromptMatch match_prompt(std::string_view prompt, const PromptCatalog& catalog);

struct StackEntry {
  enum class Source { kGenerated, kCatalog };
  Source source = Source::kGenerated;
  std::string name;
  Lut3D lut;

  friend bool operator==(const StackEntry&, const StackEntry&) = default;
};

struct FeedbackRecord {
  std::string prompt;
  std::string matched;
  double similarity = 0.0;
  std::string runner_up;
  double runner_up_similarity = 0.0;
  std::int64_t timestamp_ms = 0;

  friend bool operator==(const FeedbackRecord&, const FeedbackRecord&) = default;
};

/// Grading state for one clip: the original input frames, the LUT stack
/// (generated grade first, then catalog retouches) and the feedback history.
/// Graded frames are always derived from the original frames.
class GradingSession {
 public:
  using Clock = std::function<std::int64_t()>;

  GradingSession(std::shared_ptr<const VideoClip> original, Lut3D initial,
                 std::string initial_name = "generated");

  const VideoClip& original() const { return *original_; }
  std::shared_ptr<const VideoClip> original_ptr() const { return original_; }
  const std::vector<StackEntry>& stack() const { return stack_; }
  const std::vector<FeedbackRecord>& history() const { return history_; }

  /// Left fold of compose_luts over the stack.
  Lut3D current_lut() const;
  VideoClip graded_clip(unsigned workers = 0) const;
  Frame graded_frame(std::size_t index) const;

  /// Undo to history point `to_index`: keeps the initial grade plus the first
  /// `to_index` retouches.
  GradingSession undo(std::size_t to_index) const;

  void push(StackEntry entry, FeedbackRecord record);

  friend bool operator==(const GradingSession& a, const GradingSession& b) {
    return *a.original_ == *b.original_ && a.stack_ == b.stack_ && a.history_ == b.history_;
  }

 private:
  std::shared_ptr<const VideoClip> original_;
  std::vector<StackEntry> stack_;
  std::vector<FeedbackRecord> history_;
};

std::int64_t wall_clock_ms();

/// Matches `prompt`, stacks the matched LUT on the current grade and records
/// the feedback. Unmatchable prompts throw and leave `session` untouched.
GradingSession apply_feedback(const GradingSession& session, std::string_view prompt,
                              const PromptCatalog& catalog,
                              const GradingSession::Clock& clock = wall_clock_ms,
                              PromptMatch* match_out = nullptr);

}  // namespace gradeforge
