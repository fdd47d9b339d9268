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

// Exhaustive ground truth for tiny instances: walk the complete top-k tree
// and add up the probability of every depth-T leaf inside the epsilon-ball.

#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "xaudit/core.hpp"
#include "xaudit/distance/metrics.hpp"
#include "xaudit/model/logits.hpp"
#include "xaudit/model/provider.hpp"

namespace xaudit {

struct OracleOptions {
  double max_leaves = 1e7;  // refuse when k^T exceeds this
};

inline double oracle_tree_size(std::size_t k, std::size_t length) {
  return std::pow(static_cast<double>(k), static_cast<double>(length));
}

namespace detail {

class TreeWalker {
 public:
  TreeWalker(const TokenDistributionProvider& provider, std::span<const TokenId> target,
             const DecodingPolicy& policy, DistanceKind dist, std::size_t eps_max)
      : provider_(provider), target_(target), policy_(policy), dist_(dist),
        buckets_(eps_max + 1) {}

  void run(std::span<const TokenId> prefix) {
    history_.assign(prefix.begin(), prefix.end());
    prefix_len_ = prefix.size();
    visit(0.0);
  }

  // buckets[d] = mass of leaves at distance exactly d.
  const std::vector<CompensatedSum>& buckets() const { return buckets_; }

 private:
  void visit(double logp) {
    const std::size_t depth = history_.size() - prefix_len_;
    if (depth == target_.size()) {
      const std::span<const TokenId> cont(history_.data() + prefix_len_, depth);
      const std::size_t d = distance(dist_, cont, target_);
      if (d < buckets_.size()) buckets_[d].add(std::exp(logp));
      return;
    }
    const StepDistribution step = topk_step(provider_.next_logits(history_), policy_);
    const auto& vocab = provider_.vocabulary();
    for (std::size_t s = 0; s < step.support.size(); ++s) {
      const TokenId tok = step.support[s];
      // A path that stops before depth T never reaches the ball.
      if (vocab.is_eos(tok) && depth + 1 < target_.size()) continue;
      history_.push_back(tok);
      visit(logp + step.logprobs[s]);
      history_.pop_back();
    }
  }

  const TokenDistributionProvider& provider_;
  std::span<const TokenId> target_;
  DecodingPolicy policy_;
  DistanceKind dist_;
  std::vector<CompensatedSum> buckets_;
  TokenSeq history_;
  std::size_t prefix_len_ = 0;
};

}  // namespace detail

/**
 * Exact mass of the epsilon-ball for every epsilon in 0..eps_max in one walk.
 * Entry e is the mass of leaves within distance e; the vector is
 * nondecreasing.
 */
inline std::vector<double> oracle_mass_profile(const TokenDistributionProvider& provider,
                                               std::span<const TokenId> prefix,
                                               std::span<const TokenId> target,
                                               const DecodingPolicy& policy, DistanceKind dist,
                                               std::size_t eps_max,
                                               const OracleOptions& options = {}) {
  if (target.empty()) throw InvalidInput("oracle: empty target");
  if (prefix.empty()) throw InvalidInput("oracle: empty prefix");
  policy.validate(provider.vocabulary().size);
  const double size = oracle_tree_size(policy.k, target.size());
  if (size > options.max_leaves) {
    char msg[128];
    std::snprintf(msg, sizeof msg, "oracle: top-k tree has about %.4g leaves, above the limit of %.4g",
                  size, options.max_leaves);
    throw GuardRefused(msg, size);
  }
  detail::TreeWalker walker(provider, target, policy, dist, eps_max);
  walker.run(prefix);
  std::vector<double> profile;
  CompensatedSum running;
  for (const auto& b : walker.buckets()) {
    running.add(b.value());
    profile.push_back(running.value());
  }
  return profile;
}

inline double oracle_exact_mass(const TokenDistributionProvider& provider,
                                std::span<const TokenId> prefix, std::span<const TokenId> target,
                                const DecodingPolicy& policy, DistanceKind dist,
                                std::size_t epsilon, const OracleOptions& options = {}) {
  return oracle_mass_profile(provider, prefix, target, policy, dist, epsilon, options).back();
}

}  // namespace xaudit
