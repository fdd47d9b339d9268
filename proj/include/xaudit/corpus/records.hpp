// Copyright 2026 The Extraction Audit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xaudit/core.hpp"
#include "xaudit/corpus/tokenizer.hpp"
#include "xaudit/metrics/metrics.hpp"

namespace xaudit {

// A training sequence split into a prefix and the suffix to be extracted.
struct SequenceRecord {
  std::string id;
  TokenSeq prefix;
  TokenSeq suffix;
  std::optional<CharSpan> char_span;  // suffix bytes in the source text
  std::string source;

  friend bool operator==(const SequenceRecord&, const SequenceRecord&) = default;
};

inline std::string window_id(std::string_view source, std::size_t start) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%010zu", start);
  return std::string(source) + "@" + buf;
}

/**
 * Windows start at byte 0 and every `stride` bytes after it. Each window is
 * tokenized forward from its start and keeps the first n_pre + T tokens;
 * windows that run out of text first are dropped. Ids are zero-padded so
 * they sort in text order.
 */
inline std::vector<SequenceRecord> chunk_text(std::string_view text, const Tokenizer& tokenizer,
                                              std::size_t n_pre, std::size_t suffix_len,
                                              std::size_t stride, std::string_view source = "text") {
  if (stride < 1) throw InvalidInput("chunk_text: stride must be >= 1");
  if (n_pre < 1 || suffix_len < 1) throw InvalidInput("chunk_text: lengths must be >= 1");
  std::vector<SequenceRecord> out;
  const std::size_t need = n_pre + suffix_len;
  for (std::size_t start = 0; start < text.size(); start += stride) {
    const auto toks = tokenizer.encode(text.substr(start), need);
    if (toks.size() < need) continue;
    SequenceRecord r;
    r.id = window_id(source, start);
    r.source = std::string(source);
    for (std::size_t i = 0; i < need; ++i) (i < n_pre ? r.prefix : r.suffix).push_back(toks[i].id);
    r.char_span = CharSpan{start + toks[n_pre].begin, start + toks[need - 1].end};
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace xaudit
