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

// Softmax, temperature and top-k renormalization over a single logit row.
// Everything is computed in float64 log space.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xaudit/core.hpp"

namespace xaudit {

using LogitRow = std::vector<double>;

struct DecodingPolicy {
  std::size_t k = 1;
  double beta = 1.0;

  void validate(std::size_t vocab_size) const {
    if (k < 1 || k > vocab_size) {
      throw InvalidInput("DecodingPolicy: k=" + std::to_string(k) + " outside [1, " +
                         std::to_string(vocab_size) + "]");
    }
    if (!(beta > 0.0) || !std::isfinite(beta)) {
      throw InvalidInput("DecodingPolicy: temperature must be positive and finite");
    }
  }
};

// Renormalized top-k distribution for one decoding step. `support` is in rank
// order (rank 1 first) and `logprobs[i]` belongs to `support[i]`.
struct StepDistribution {
  std::vector<TokenId> support;
  std::vector<double> logprobs;

  // 1-based rank of `token` in the support, or nullopt if truncated away.
  std::optional<std::size_t> rank_of(TokenId token) const {
    auto it = std::find(support.begin(), support.end(), token);
    if (it == support.end()) return std::nullopt;
    return static_cast<std::size_t>(it - support.begin()) + 1;
  }

  std::optional<double> logprob_of(TokenId token) const {
    auto rank = rank_of(token);
    if (!rank) return std::nullopt;
    return logprobs[*rank - 1];
  }
};

namespace detail {

inline void require_finite(std::span<const double> row, const char* who) {
  if (row.empty()) throw InvalidInput(std::string(who) + ": empty logit row");
  for (double v : row) {
    if (!std::isfinite(v)) throw InvalidInput(std::string(who) + ": non-finite logit");
  }
}

}  // namespace detail

inline double logsumexp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - m);
  return m + std::log(acc);
}

inline std::vector<double> log_softmax(std::span<const double> row) {
  detail::require_finite(row, "log_softmax");
  const double lse = logsumexp(row);
  std::vector<double> out(row.size());
  std::transform(row.begin(), row.end(), out.begin(), [lse](double v) { return v - lse; });
  return out;
}

inline LogitRow apply_temperature(std::span<const double> row, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw InvalidInput("apply_temperature: beta must be positive and finite");
  }
  LogitRow out(row.begin(), row.end());
  if (beta != 1.0) {
    for (double& v : out) v /= beta;
  }
  return out;
}

// Token ids ordered by descending logit; equal logits rank the lower id first.
inline std::vector<TokenId> rank_tokens(std::span<const double> row, std::size_t count) {
  std::vector<TokenId> ids(row.size());
  std::iota(ids.begin(), ids.end(), TokenId{0});
  auto before = [&row](TokenId a, TokenId b) {
    if (row[a] != row[b]) return row[a] > row[b];
    return a < b;
  };
  count = std::min(count, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(count), ids.end(),
                    before);
  ids.resize(count);
  return ids;
}

// log Pr(v) = log_softmax(row / beta)[v] - logsumexp of those values over the
// k highest-logit tokens.
inline StepDistribution topk_step(std::span<const double> row, const DecodingPolicy& policy) {
  detail::require_finite(row, "topk_step");
  policy.validate(row.size());
  const LogitRow scaled = apply_temperature(row, policy.beta);
  const std::vector<double> r = log_softmax(scaled);

  StepDistribution step;
  step.support = rank_tokens(scaled, policy.k);
  std::vector<double> kept(step.support.size());
  for (std::size_t i = 0; i < kept.size(); ++i) kept[i] = r[step.support[i]];
  const double z = logsumexp(kept);
  step.logprobs.resize(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) step.logprobs[i] = kept[i] - z;
  return step;
}

}  // namespace xaudit
