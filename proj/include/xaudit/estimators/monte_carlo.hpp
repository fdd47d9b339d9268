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
 * Monte Carlo estimate of near-verbatim mass.
 *
 * Draws M continuations by ancestral sampling from the renormalized top-k
 * step distributions and counts those within epsilon of the target. Every
 * uniform draw comes from a keyed hash of (seed, sample, step), so the
 * estimate does not depend on the number of workers or on scheduling.
 */

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <span>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "xaudit/core.hpp"
#include "xaudit/distance/metrics.hpp"
#include "xaudit/model/logits.hpp"
#include "xaudit/model/provider.hpp"

namespace xaudit {

struct McConfig {
  std::uint64_t samples = 1000;
  std::uint64_t seed = 0;
  DistanceKind dist = DistanceKind::Levenshtein;
  std::size_t epsilon = 0;
  double confidence_level = 0.95;
  std::size_t workers = 1;

  void validate() const {
    if (samples < 1) throw InvalidInput("McConfig: samples must be >= 1");
    if (!(confidence_level > 0.0 && confidence_level < 1.0)) {
      throw InvalidInput("McConfig: confidence level must lie in (0, 1)");
    }
    if (workers < 1) throw InvalidInput("McConfig: workers must be >= 1");
  }
};

struct McEstimate {
  double p_hat = 0.0;
  std::uint64_t hits = 0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  std::uint64_t samples = 0;
  std::uint64_t early_eos = 0;  // samples that stopped before depth T (misses)
};

// Wilson score interval for `hits` successes out of `n`.
inline std::pair<double, double> wilson_interval(std::uint64_t hits, std::uint64_t n,
                                                 double confidence_level) {
  if (n == 0) throw InvalidInput("wilson_interval: no trials");
  if (hits > n) throw InvalidInput("wilson_interval: hits exceed trials");
  if (!(confidence_level > 0.0 && confidence_level < 1.0)) {
    throw InvalidInput("wilson_interval: confidence level must lie in (0, 1)");
  }
  const boost::math::normal_distribution<double> normal;
  const double z = boost::math::quantile(normal, 0.5 + confidence_level / 2.0);
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  const double lo = hits == 0 ? 0.0 : std::clamp(center - half, 0.0, p);
  const double hi = hits == n ? 1.0 : std::clamp(center + half, p, 1.0);
  return {lo, hi};
}

inline McEstimate make_estimate(std::uint64_t hits, std::uint64_t samples,
                                double confidence_level) {
  McEstimate e;
  e.hits = hits;
  e.samples = samples;
  e.p_hat = static_cast<double>(hits) / static_cast<double>(samples);
  std::tie(e.ci_low, e.ci_high) = wilson_interval(hits, samples, confidence_level);
  return e;
}

// Pools replicates by concatenating their samples.
inline McEstimate mc_pool(std::span<const McEstimate> replicates, double confidence_level = 0.95) {
  if (replicates.empty()) throw InvalidInput("mc_pool: no replicates");
  std::uint64_t hits = 0, samples = 0, early = 0;
  for (const auto& r : replicates) {
    hits += r.hits;
    samples += r.samples;
    early += r.early_eos;
  }
  McEstimate e = make_estimate(hits, samples, confidence_level);
  e.early_eos = early;
  return e;
}

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform in [0, 1) determined only by (seed, sample, step).
inline double keyed_uniform(std::uint64_t seed, std::uint64_t sample, std::uint64_t step) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ mix64(sample * 0xD1B54A32D192ED03ULL + 1));
  h = mix64(h ^ (step * 0xA24BAED4963EE407ULL + 2));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

namespace detail {

// Step distributions along sampled paths, keyed by the continuation so far.
class StepCache {
 public:
  StepCache(const TokenDistributionProvider& provider, std::span<const TokenId> prefix,
            const DecodingPolicy& policy)
      : provider_(provider), prefix_(prefix.begin(), prefix.end()), policy_(policy) {}

  const std::vector<double>& cumulative(const TokenSeq& cont, const StepDistribution** step) {
    auto it = cache_.find(cont);
    if (it == cache_.end()) {
      Entry e;
      e.step = topk_step(provider_.next_logits(concat(prefix_, cont)), policy_);
      double acc = 0.0;
      for (double lp : e.step.logprobs) {
        acc += std::exp(lp);
        e.cdf.push_back(acc);
      }
      it = cache_.emplace(cont, std::move(e)).first;
    }
    *step = &it->second.step;
    return it->second.cdf;
  }

 private:
  struct Entry {
    StepDistribution step;
    std::vector<double> cdf;
  };
  const TokenDistributionProvider& provider_;
  TokenSeq prefix_;
  DecodingPolicy policy_;
  std::map<TokenSeq, Entry> cache_;
};

struct SampleTally {
  std::uint64_t hits = 0;
  std::uint64_t early_eos = 0;
};

inline SampleTally draw_range(const TokenDistributionProvider& provider,
                              std::span<const TokenId> prefix, std::span<const TokenId> target,
                              const DecodingPolicy& policy, const McConfig& cfg,
                              std::uint64_t begin, std::uint64_t end) {
  StepCache cache(provider, prefix, policy);
  const auto& vocab = provider.vocabulary();
  SampleTally tally;
  TokenSeq cont;
  for (std::uint64_t i = begin; i < end; ++i) {
    cont.clear();
    bool stopped = false;
    for (std::size_t t = 0; t < target.size(); ++t) {
      const StepDistribution* step = nullptr;
      const auto& cdf = cache.cumulative(cont, &step);
      // Scale by the total so rounding in the cdf never leaves a gap.
      const double u = keyed_uniform(cfg.seed, i, t) * cdf.back();
      const std::size_t pick = static_cast<std::size_t>(
          std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      const TokenId tok = step->support[std::min(pick, cdf.size() - 1)];
      cont.push_back(tok);
      if (vocab.is_eos(tok) && t + 1 < target.size()) {
        stopped = true;
        break;
      }
    }
    if (stopped) {
      ++tally.early_eos;
      continue;
    }
    if (distance(cfg.dist, cont, target) <= cfg.epsilon) ++tally.hits;
  }
  return tally;
}

}  // namespace detail

inline McEstimate mc_estimate(const TokenDistributionProvider& provider,
                              std::span<const TokenId> prefix, std::span<const TokenId> target,
                              const DecodingPolicy& policy, const McConfig& cfg) {
  cfg.validate();
  if (target.empty()) throw InvalidInput("mc_estimate: empty target");
  if (prefix.empty()) throw InvalidInput("mc_estimate: empty prefix");
  policy.validate(provider.vocabulary().size);

  const std::size_t workers =
      static_cast<std::size_t>(std::min<std::uint64_t>(cfg.workers, cfg.samples));
  std::vector<detail::SampleTally> tallies(workers);
  auto range = [&](std::size_t w) {
    const std::uint64_t chunk = cfg.samples / workers, extra = cfg.samples % workers;
    const std::uint64_t begin = w * chunk + std::min<std::uint64_t>(w, extra);
    return std::pair{begin, begin + chunk + (w < extra ? 1 : 0)};
  };
  if (workers == 1) {
    tallies[0] = detail::draw_range(provider, prefix, target, policy, cfg, 0, cfg.samples);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          auto [b, e] = range(w);
          tallies[w] = detail::draw_range(provider, prefix, target, policy, cfg, b, e);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }
  std::uint64_t hits = 0, early = 0;
  for (const auto& t : tallies) {
    hits += t.hits;
    early += t.early_eos;
  }
  McEstimate e = make_estimate(hits, cfg.samples, cfg.confidence_level);
  e.early_eos = early;
  return e;
}

}  // namespace xaudit
