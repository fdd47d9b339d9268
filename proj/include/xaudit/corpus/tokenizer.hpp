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

// Desk-scale tokenizers. Real model tokenizers live behind the bridge.

#include <algorithm>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "xaudit/core.hpp"

namespace xaudit {

struct EncodedToken {
  TokenId id = 0;
  std::size_t begin = 0;  // byte offsets into the encoded text, half-open
  std::size_t end = 0;
};

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  // At most `max_tokens` tokens from the start of `text`.
  std::vector<EncodedToken> encode(
      std::string_view text,
      std::size_t max_tokens = std::numeric_limits<std::size_t>::max()) const {
    return do_encode(text, max_tokens);
  }
  virtual std::string decode(std::span<const TokenId> tokens) const = 0;
  virtual std::size_t vocab_size() const = 0;
  virtual std::string name() const = 0;

 protected:
  virtual std::vector<EncodedToken> do_encode(std::string_view text,
                                              std::size_t max_tokens) const = 0;
};

// One token per byte; ids 0..255.
class ByteTokenizer final : public Tokenizer {
 public:
  std::vector<EncodedToken> do_encode(std::string_view text,
                                      std::size_t max_tokens) const override {
    std::vector<EncodedToken> out;
    const std::size_t n = std::min(text.size(), max_tokens);
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back({static_cast<TokenId>(static_cast<unsigned char>(text[i])), i, i + 1});
    }
    return out;
  }
  std::string decode(std::span<const TokenId> tokens) const override {
    std::string s;
    s.reserve(tokens.size());
    for (TokenId t : tokens) {
      if (t > 255) throw InvalidInput("ByteTokenizer: id " + std::to_string(t) + " is not a byte");
      s.push_back(static_cast<char>(t));
    }
    return s;
  }
  std::size_t vocab_size() const override { return 256; }
  std::string name() const override { return "byte"; }
};

/**
 * Splits on ASCII whitespace. The vocabulary is built by fit() in order of
 * first appearance; id 0 is reserved for unknown words. decode() joins words
 * with single spaces.
 */
class WhitespaceTokenizer final : public Tokenizer {
 public:
  static constexpr TokenId kUnknown = 0;

  WhitespaceTokenizer() { words_.push_back("<unk>"); }

  void fit(std::string_view text) {
    for (const auto& [b, e] : spans(text, std::numeric_limits<std::size_t>::max())) {
      std::string w(text.substr(b, e - b));
      if (ids_.emplace(w, static_cast<TokenId>(words_.size())).second) words_.push_back(w);
    }
  }

  std::vector<EncodedToken> do_encode(std::string_view text,
                                      std::size_t max_tokens) const override {
    std::vector<EncodedToken> out;
    for (const auto& [b, e] : spans(text, max_tokens)) {
      auto it = ids_.find(std::string(text.substr(b, e - b)));
      out.push_back({it == ids_.end() ? kUnknown : it->second, b, e});
    }
    return out;
  }
  std::string decode(std::span<const TokenId> tokens) const override {
    std::string s;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i] >= words_.size()) {
        throw InvalidInput("WhitespaceTokenizer: unknown id " + std::to_string(tokens[i]));
      }
      if (i > 0) s.push_back(' ');
      s += words_[tokens[i]];
    }
    return s;
  }
  std::size_t vocab_size() const override { return words_.size(); }
  std::string name() const override { return "whitespace"; }

 private:
  static bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  }

  static std::vector<std::pair<std::size_t, std::size_t>> spans(std::string_view text,
                                                                std::size_t max_tokens) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t i = 0;
    while (i < text.size() && out.size() < max_tokens) {
      while (i < text.size() && is_space(text[i])) ++i;
      if (i == text.size()) break;
      const std::size_t b = i;
      while (i < text.size() && !is_space(text[i])) ++i;
      out.emplace_back(b, i);
    }
    return out;
  }

  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> ids_;
};

inline std::unique_ptr<Tokenizer> make_tokenizer(std::string_view kind, std::string_view fit_text) {
  if (kind == "byte") return std::make_unique<ByteTokenizer>();
  if (kind == "whitespace") {
    auto t = std::make_unique<WhitespaceTokenizer>();
    t->fit(fit_text);
    return t;
  }
  throw InvalidInput("unknown tokenizer '" + std::string(kind) + "'");
}

}  // namespace xaudit
