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

#include "gradeforge/error.hpp"

namespace gradeforge {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kUnsupportedSize: return "unsupported-size";
    case ErrorKind::kParse: return "parse-error";
    case ErrorKind::kIo: return "io-error";
    case ErrorKind::kDegenerateEmbedding: return "degenerate-embedding";
    case ErrorKind::kUnmatchablePrompt: return "unmatchable-prompt";
    case ErrorKind::kInvalidCatalog: return "invalid-catalog";
    case ErrorKind::kTraining: return "training-error";
    case ErrorKind::kNotFound: return "not-found";
    case ErrorKind::kConflict: return "conflict";
    case ErrorKind::kUnavailable: return "unavailable";
  }
  return "unknown";
}

}  // namespace gradeforge
