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

/**
 * Streaming epsilon-viability oracles.
 *
 * An oracle is built from a target suffix and a budget epsilon. Each partial
 * path carries its own `State`, created by `init()` and advanced one token at
 * a time by `update()`, which also returns `epsilon_star`: a lower bound on the
 * final distance any completion of the path can reach. The search drops a
 * child as soon as epsilon_star > epsilon. Soundness: if some completion ends
 * within epsilon, every prefix of it reports epsilon_star <= epsilon.
 *
 * At depth T, `is_final()` is the acceptance test against the full target.
 */

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "xaudit/core.hpp"
#include "xaudit/distance/metrics.hpp"

namespace xaudit {

template <class O>
concept ViabilityOracle = requires(const O& oracle, const typename O::State& state, TokenId tok) {
  { oracle.init() } -> std::same_as<typename O::State>;
  { oracle.update(state, tok) } -> std::same_as<std::pair<typename O::State, std::size_t>>;
  { oracle.is_final(state) } -> std::same_as<bool>;
  { oracle.final_distance(state) } -> std::same_as<std::optional<std::size_t>>;
};

// Accepts everything; used by the unpruned search.
class UnconstrainedOracle {
 public:
  struct State {};

  State init() const { return {}; }
  std::pair<State, std::size_t> update(const State&, TokenId) const { return {State{}, 0}; }
  bool is_final(const State&) const { return true; }
  std::optional<std::size_t> final_distance(const State&) const { return std::nullopt; }
};

// Running mismatch count against the target. Monotone, so once it exceeds
// epsilon the path can never come back.
class HammingOracle {
 public:
  struct State {
    std::size_t mismatches = 0;
    std::size_t depth = 0;
  };

  HammingOracle(TokenSeq target, std::size_t epsilon)
      : target_(std::move(target)), epsilon_(epsilon) {}

  State init() const { return {}; }

  std::pair<State, std::size_t> update(const State& s, TokenId tok) const {
    if (s.depth >= target_.size()) {
      throw ContractViolation("HammingOracle: update past target length");
    }
    State next{s.mismatches + (tok != target_[s.depth] ? 1 : 0), s.depth + 1};
    return {next, next.mismatches};
  }

  bool is_final(const State& s) const {
    return s.depth == target_.size() && s.mismatches <= epsilon_;
  }
  std::optional<std::size_t> final_distance(const State& s) const {
    if (s.depth != target_.size()) return std::nullopt;
    return s.mismatches;
  }

  std::size_t epsilon() const { return epsilon_; }
  const TokenSeq& target() const { return target_; }

 private:
  TokenSeq target_;
  std::size_t epsilon_;
};

/**
 * Banded Wagner-Fischer row per path.
 *
 * At depth t the state holds D[t, j] for j in [t - eps, t + eps], stored at
 * offset j - t + eps in a buffer of width 2*eps + 1. Columns outside [0, T]
 * and cells never reached hold a saturating infinity. Only
 * [max(0, t - eps), min(T, t + eps)] is meaningful; every other column has
 * D[t, j] >= |t - j| > eps and cannot change a viability decision.
 *
 * Cells whose true value is <= eps are computed exactly. Cells above eps may
 * be overestimated, which is harmless because they are above eps either way.
 */
class LevenshteinOracle {
 public:
  using Cell = std::uint32_t;
  static constexpr Cell kInf = Cell{1} << 30;

  struct State {
    std::size_t depth = 0;
    std::vector<Cell> row;
  };

  LevenshteinOracle(TokenSeq target, std::size_t epsilon)
      : target_(std::move(target)), epsilon_(epsilon), width_(2 * epsilon + 1) {}

  State init() const {
    State s;
    s.row.assign(width_, kInf);
    const std::size_t hi = std::min(target_.size(), epsilon_);
    for (std::size_t j = 0; j <= hi; ++j) s.row[j + epsilon_] = static_cast<Cell>(j);
    return s;
  }

  // Writes the child row into `out`, reusing its buffer.
  std::size_t update_into(const State& parent, TokenId tok, State& out) const {
    const std::size_t t = parent.depth;
    if (t >= target_.size()) {
      throw ContractViolation("LevenshteinOracle: update past target length");
    }
    const std::size_t u = t + 1;
    out.depth = u;
    out.row.assign(width_, kInf);
    const std::size_t lo = u > epsilon_ ? u - epsilon_ : 0;
    const std::size_t hi = std::min(target_.size(), u + epsilon_);
    Cell best = kInf;
    for (std::size_t j = lo; j <= hi; ++j) {
      const std::size_t oc = j + epsilon_ - u;  // child offset
      const std::size_t op = oc + 1;            // same column in the parent row
      Cell v = kInf;
      if (op < width_) v = std::min(v, sat_inc(parent.row[op], 1));  // delete generated token
      if (j > lo) v = std::min(v, sat_inc(out.row[oc - 1], 1));      // insert target token
      if (j >= 1) {                                                  // match / substitute
        const std::size_t od = op - 1;
        v = std::min(v, sat_inc(parent.row[od], tok != target_[j - 1] ? 1 : 0));
      }
      out.row[oc] = v;
      best = std::min(best, v);
    }
    return best;
  }

  std::pair<State, std::size_t> update(const State& parent, TokenId tok) const {
    State out;
    const std::size_t star = update_into(parent, tok, out);
    return {std::move(out), star};
  }

  bool is_final(const State& s) const {
    auto d = final_distance(s);
    return d && *d <= epsilon_;
  }

  // D[T, T] once the path has length T.
  std::optional<std::size_t> final_distance(const State& s) const {
    if (s.depth != target_.size()) return std::nullopt;
    return s.row[epsilon_];
  }

  // In-band columns [j_min, j_max] and their values for the state's depth.
  struct Band {
    std::size_t j_min = 0;
    std::size_t j_max = 0;
    std::vector<Cell> values;
  };
  Band band(const State& s) const {
    Band b;
    b.j_min = s.depth > epsilon_ ? s.depth - epsilon_ : 0;
    b.j_max = std::min(target_.size(), s.depth + epsilon_);
    for (std::size_t j = b.j_min; j <= b.j_max; ++j) b.values.push_back(s.row[j + epsilon_ - s.depth]);
    return b;
  }

  std::size_t epsilon() const { return epsilon_; }
  const TokenSeq& target() const { return target_; }

 private:
  static Cell sat_inc(Cell a, Cell b) { return a >= kInf - b ? kInf : a + b; }

  TokenSeq target_;
  std::size_t epsilon_;
  std::size_t width_;
};

static_assert(ViabilityOracle<UnconstrainedOracle>);
static_assert(ViabilityOracle<HammingOracle>);
static_assert(ViabilityOracle<LevenshteinOracle>);

}  // namespace xaudit
