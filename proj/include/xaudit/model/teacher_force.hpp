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

#include <span>
#include <vector>

#include "xaudit/model/logits.hpp"
#include "xaudit/model/provider.hpp"

namespace xaudit {

// Sum of per-step top-k log-probabilities along a fixed suffix. Returns the
// zero sentinel as soon as a suffix token falls outside the step's support.
inline LogProb teacher_force_verbatim(const TokenDistributionProvider& provider,
                                      std::span<const TokenId> prefix,
                                      std::span<const TokenId> suffix,
                                      const DecodingPolicy& policy) {
  if (suffix.empty()) throw InvalidInput("teacher_force_verbatim: empty suffix");
  policy.validate(provider.vocabulary().size);
  TokenSeq history(prefix.begin(), prefix.end());
  history.reserve(prefix.size() + suffix.size());
  LogProb total;
  for (TokenId tok : suffix) {
    const StepDistribution step = topk_step(provider.next_logits(history), policy);
    auto lp = step.logprob_of(tok);
    if (!lp) return LogProb::zero();
    total *= LogProb::from_log(*lp);
    history.push_back(tok);
  }
  return total;
}

struct GreedyDecode {
  TokenSeq continuation;
  std::size_t token_evals = 0;
};

// Rank-1 token at every step (top-k does not change the argmax). Costs one
// prefill plus T-1 single-token decode steps.
inline GreedyDecode greedy_decode(const TokenDistributionProvider& provider,
                                  std::span<const TokenId> prefix, std::size_t length) {
  GreedyDecode out;
  TokenSeq history(prefix.begin(), prefix.end());
  for (std::size_t t = 0; t < length; ++t) {
    const LogitRow row = provider.next_logits(history);
    const TokenId best = rank_tokens(row, 1).front();
    out.continuation.push_back(best);
    history.push_back(best);
  }
  out.token_evals = length == 0 ? 0 : prefix.size() + (length - 1);
  return out;
}

}  // namespace xaudit
