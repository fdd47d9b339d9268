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

// Desk-scale stand-ins for a language model. Both are immutable after
// construction, so concurrent queries are safe.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xaudit/model/provider.hpp"

namespace xaudit {

// Exact history -> row lookup with a fallback row for everything else.
class TableModel final : public TokenDistributionProvider {
 public:
  TableModel(Vocabulary vocab, LogitRow default_row)
      : vocab_(std::move(vocab)), default_row_(std::move(default_row)) {
    vocab_.validate();
    check_row(default_row_);
  }

  TableModel& set(TokenSeq history, LogitRow row) {
    check_row(row);
    rows_.insert_or_assign(std::move(history), std::move(row));
    return *this;
  }

  const Vocabulary& vocabulary() const override { return vocab_; }

  LogitRow next_logits(std::span<const TokenId> history) const override {
    auto it = rows_.find(TokenSeq(history.begin(), history.end()));
    return it == rows_.end() ? default_row_ : it->second;
  }

  std::string name() const override { return "table"; }

  const LogitRow& default_row() const { return default_row_; }
  const std::map<TokenSeq, LogitRow>& rows() const { return rows_; }

 private:
  void check_row(const LogitRow& row) const {
    if (row.size() != vocab_.size) throw InvalidInput("TableModel: row length != vocabulary size");
    for (double v : row) {
      if (!std::isfinite(v)) throw InvalidInput("TableModel: non-finite logit");
    }
  }

  Vocabulary vocab_;
  LogitRow default_row_;
  std::map<TokenSeq, LogitRow> rows_;
};

struct PlantedSequence {
  TokenSeq tokens;
  double weight = 1.0;  // counted as this many copies of the sequence
};

struct RandomNGramSpec {
  std::size_t vocab_size = 6;
  std::size_t order = 2;
  std::optional<TokenId> eos;
  std::size_t sequences = 8;
  std::size_t sequence_length = 12;
  double skew = 2.0;  // >1 concentrates mass on low token ids
  std::uint64_t seed = 0;
  std::vector<PlantedSequence> planted;
};

/**
 * Order-m conditional frequency model with add-one smoothing.
 *
 * The logit for token v after context c is log((count(c, v) + 1) /
 * (count(c) + |V|)), so every token keeps strictly positive probability.
 * Contexts are the last m-1 tokens of the history; near the start of a
 * sequence the shorter available context is used. Unseen contexts yield the
 * uniform row.
 */
class NGramModel final : public TokenDistributionProvider {
 public:
  NGramModel(Vocabulary vocab, std::size_t order, std::span<const TokenSeq> corpus,
             std::span<const PlantedSequence> planted = {})
      : vocab_(std::move(vocab)), order_(order) {
    vocab_.validate();
    if (order_ < 1) throw InvalidInput("NGramModel: order must be >= 1");
    std::map<TokenSeq, std::vector<double>> counts;
    for (const auto& seq : corpus) accumulate(counts, seq, 1.0);
    for (const auto& p : planted) {
      if (!(p.weight > 0.0)) throw InvalidInput("NGramModel: planted weight must be positive");
      accumulate(counts, p.tokens, p.weight);
    }
    const double v = static_cast<double>(vocab_.size);
    uniform_row_.assign(vocab_.size, -std::log(v));
    for (auto& [ctx, c] : counts) {
      double total = 0.0;
      for (double x : c) total += x;
      LogitRow row(vocab_.size);
      for (std::size_t i = 0; i < row.size(); ++i) row[i] = std::log((c[i] + 1.0) / (total + v));
      rows_.emplace(ctx, std::move(row));
    }
  }

  static NGramModel random(const RandomNGramSpec& spec) {
    std::mt19937_64 engine(spec.seed);
    auto uniform = [&engine] { return static_cast<double>(engine() >> 11) * 0x1.0p-53; };
    std::vector<TokenSeq> corpus(spec.sequences);
    for (auto& seq : corpus) {
      seq.resize(spec.sequence_length);
      for (auto& tok : seq) {
        const double u = std::pow(uniform(), spec.skew);
        tok = static_cast<TokenId>(
            std::min<double>(static_cast<double>(spec.vocab_size) - 1.0,
                             std::floor(u * static_cast<double>(spec.vocab_size))));
      }
    }
    return NGramModel(Vocabulary{spec.vocab_size, spec.eos}, spec.order, corpus, spec.planted);
  }

  const Vocabulary& vocabulary() const override { return vocab_; }

  LogitRow next_logits(std::span<const TokenId> history) const override {
    const std::size_t n = std::min(history.size(), order_ - 1);
    auto it = rows_.find(TokenSeq(history.end() - static_cast<std::ptrdiff_t>(n), history.end()));
    return it == rows_.end() ? uniform_row_ : it->second;
  }

  std::string name() const override { return "ngram"; }

  std::size_t order() const { return order_; }

 private:
  void accumulate(std::map<TokenSeq, std::vector<double>>& counts, const TokenSeq& seq,
                  double weight) const {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (seq[i] >= vocab_.size) throw InvalidInput("NGramModel: token outside vocabulary");
      const std::size_t n = std::min(i, order_ - 1);
      TokenSeq ctx(seq.begin() + static_cast<std::ptrdiff_t>(i - n),
                   seq.begin() + static_cast<std::ptrdiff_t>(i));
      auto [it, inserted] = counts.try_emplace(std::move(ctx), vocab_.size, 0.0);
      it->second[seq[i]] += weight;
    }
  }

  Vocabulary vocab_;
  std::size_t order_;
  LogitRow uniform_row_;
  std::map<TokenSeq, LogitRow> rows_;
};

}  // namespace xaudit
