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

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xaudit/core.hpp"

namespace xaudit {

enum class DistanceKind { Hamming, Levenshtein };

inline std::string to_string(DistanceKind kind) {
  return kind == DistanceKind::Hamming ? "hamming" : "levenshtein";
}

inline DistanceKind parse_distance_kind(std::string_view s) {
  if (s == "hamming" || s == "ham") return DistanceKind::Hamming;
  if (s == "levenshtein" || s == "lev") return DistanceKind::Levenshtein;
  throw InvalidInput("unknown distance '" + std::string(s) + "'");
}

inline std::size_t hamming(std::span<const TokenId> b, std::span<const TokenId> c) {
  if (b.size() != c.size()) {
    throw InvalidInput("hamming: lengths differ (" + std::to_string(b.size()) + " vs " +
                       std::to_string(c.size()) + ")");
  }
  std::size_t n = 0;
  for (std::size_t i = 0; i < b.size(); ++i) n += b[i] != c[i] ? 1 : 0;
  return n;
}

// Last row D[|b|, 0..|c|] of the unbanded Wagner-Fischer table, with
// D[i,0] = i and D[0,j] = j.
inline std::vector<std::size_t> levenshtein_last_row(std::span<const TokenId> b,
                                                     std::span<const TokenId> c) {
  std::vector<std::size_t> prev(c.size() + 1), cur(c.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= b.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= c.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (b[i - 1] != c[j - 1] ? 1 : 0);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev;
}

inline std::size_t levenshtein(std::span<const TokenId> b, std::span<const TokenId> c) {
  return levenshtein_last_row(b, c).back();
}

inline std::size_t distance(DistanceKind kind, std::span<const TokenId> b,
                            std::span<const TokenId> c) {
  return kind == DistanceKind::Hamming ? hamming(b, c) : levenshtein(b, c);
}

using BigInt = boost::multiprecision::cpp_int;

// sum_{r=0..eps} C(T, r) * (|V|-1)^r, exactly.
inline BigInt hamming_ball_size(std::size_t vocab_size, std::size_t length, std::size_t epsilon) {
  if (vocab_size < 1) throw InvalidInput("hamming_ball_size: empty vocabulary");
  if (epsilon > length) throw InvalidInput("hamming_ball_size: epsilon exceeds length");
  BigInt total = 0;
  BigInt choose = 1;  // C(T, r)
  BigInt power = 1;   // (|V|-1)^r
  for (std::size_t r = 0; r <= epsilon; ++r) {
    if (r > 0) {
      choose = choose * (length - r + 1) / r;
      power *= vocab_size - 1;
    }
    total += choose * power;
  }
  return total;
}

// Number of length-|target| sequences over the vocabulary within `epsilon`
// of the target, by full enumeration. Only meant for tiny instances; the
// Levenshtein ball has no closed form here.
inline std::size_t enumerate_ball_size(DistanceKind kind, std::size_t vocab_size,
                                       std::span<const TokenId> target, std::size_t epsilon) {
  const std::size_t len = target.size();
  double space = std::pow(static_cast<double>(vocab_size), static_cast<double>(len));
  if (space > 1e7) throw GuardRefused("enumerate_ball_size: space too large", space);
  TokenSeq seq(len, 0);
  std::size_t count = 0;
  while (true) {
    if (distance(kind, seq, target) <= epsilon) ++count;
    std::size_t pos = 0;
    while (pos < len && ++seq[pos] == vocab_size) seq[pos++] = 0;
    if (pos == len) break;
  }
  return count;
}

}  // namespace xaudit
