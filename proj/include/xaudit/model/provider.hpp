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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xaudit/core.hpp"
#include "xaudit/model/logits.hpp"

namespace xaudit {

struct Vocabulary {
  std::size_t size = 0;
  std::optional<TokenId> eos;

  void validate() const {
    if (size < 2) throw InvalidInput("Vocabulary: size must be at least 2");
    if (eos && *eos >= size) throw InvalidInput("Vocabulary: eos id out of range");
  }
  bool contains(TokenId id) const { return id < size; }
  bool is_eos(TokenId id) const { return eos && *eos == id; }
};

/**
 * Pull-based source of next-token logits.
 *
 * Implementations are deterministic (identical history, identical row) and
 * must tolerate concurrent const calls from several workers. The history is
 * the full token sequence: prefix followed by whatever has been generated.
 */
class TokenDistributionProvider {
 public:
  virtual ~TokenDistributionProvider() = default;

  virtual const Vocabulary& vocabulary() const = 0;
  virtual LogitRow next_logits(std::span<const TokenId> history) const = 0;

  // Row i belongs to histories[i]. Remote providers override this to batch
  // requests; the default simply loops.
  virtual std::vector<LogitRow> next_logits_batch(std::span<const TokenSeq> histories) const {
    std::vector<LogitRow> rows;
    rows.reserve(histories.size());
    for (const auto& h : histories) rows.push_back(next_logits(h));
    return rows;
  }

  virtual std::string name() const { return "provider"; }
};

inline TokenSeq concat(std::span<const TokenId> a, std::span<const TokenId> b) {
  TokenSeq out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace xaudit
