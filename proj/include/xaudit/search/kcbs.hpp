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
 * Top-k constrained beam search.
 *
 * Beam search whose expansion and scoring follow the renormalized top-k
 * distribution, so every returned continuation carries its exact probability
 * under top-k decoding. The last step is not pruned to the beam width: all
 * surviving depth-T children are returned. The probabilities of returned
 * continuations that lie in the epsilon-ball around the target sum to a
 * lower bound on the ball's mass.
 *
 * With a viability oracle the search discards children that can no longer
 * finish within epsilon before ranking, and banks the mass of viable children
 * lost to the across-beam prune. That bank plus the lower bound is an upper
 * bound.
 *
 * Typical use:
 *
 *   SearchConfig cfg;
 *   cfg.beam_width = 20;
 *   cfg.policy = {.k = 40};
 *   cfg.suffix_len = 50;
 *   cfg.variant = Variant::pruned(DistanceKind::Levenshtein, 5);
 *   SearchOutcome out = kcbs(model, prefix, target, cfg);
 */

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xaudit/core.hpp"
#include "xaudit/distance/metrics.hpp"
#include "xaudit/distance/viability.hpp"
#include "xaudit/model/logits.hpp"
#include "xaudit/model/provider.hpp"

namespace xaudit {

enum class VariantKind { Baseline, Pruned };

// Baseline searches unconstrained and filters finals against (dist, epsilon)
// afterwards. Pruned bakes (dist, epsilon) into the search.
struct Variant {
  VariantKind kind = VariantKind::Baseline;
  DistanceKind dist = DistanceKind::Levenshtein;
  std::size_t epsilon = 0;

  static Variant baseline(DistanceKind dist = DistanceKind::Levenshtein, std::size_t epsilon = 0) {
    return {VariantKind::Baseline, dist, epsilon};
  }
  static Variant pruned(DistanceKind dist, std::size_t epsilon) {
    return {VariantKind::Pruned, dist, epsilon};
  }

  std::string label() const {
    if (kind == VariantKind::Baseline) return "baseline";
    return dist == DistanceKind::Hamming ? "ham" : "lev";
  }
};

struct SearchConfig {
  std::size_t beam_width = 20;
  DecodingPolicy policy{40, 1.0};
  std::size_t suffix_len = 50;
  Variant variant;
  std::optional<double> tau_min;
  bool record_eos = true;
  // Debug ledger of mass discarded as non-viable; only needed to close the
  // frontier identity for pruned runs.
  bool track_nonviable = false;

  void validate(const Vocabulary& vocab) const {
    if (beam_width < 1) throw InvalidInput("SearchConfig: beam width must be >= 1");
    if (suffix_len < 1) throw InvalidInput("SearchConfig: suffix length must be >= 1");
    policy.validate(vocab.size);
    if (variant.kind == VariantKind::Pruned && variant.epsilon > suffix_len) {
      throw InvalidInput("SearchConfig: epsilon exceeds suffix length");
    }
    if (tau_min && !(*tau_min > 0.0 && *tau_min <= 1.0)) {
      throw InvalidInput("SearchConfig: tau_min must lie in (0, 1]");
    }
  }
};

struct FinalCandidate {
  TokenSeq continuation;
  double logp = 0.0;
  std::optional<std::size_t> distance;

  double prob() const { return std::exp(logp); }
};

struct EosRecord {
  TokenSeq continuation;  // ends with the EOS token
  double logp = 0.0;
  std::size_t depth = 0;
};

enum class TerminationKind { Completed, EmptyViableSet, TauMinCutoff };

struct Termination {
  TerminationKind kind = TerminationKind::Completed;
  std::size_t depth = 0;  // depth at which the search stopped
};

inline std::string to_string(TerminationKind kind) {
  switch (kind) {
    case TerminationKind::Completed: return "completed";
    case TerminationKind::EmptyViableSet: return "empty_viable_set";
    case TerminationKind::TauMinCutoff: return "tau_min_cutoff";
  }
  return "unknown";
}

struct CostLedger {
  std::size_t prefill_tokens = 0;
  std::size_t decode_tokens = 0;
  std::size_t total() const { return prefill_tokens + decode_tokens; }
};

struct SearchOutcome {
  Variant variant;
  std::vector<FinalCandidate> finals;  // ranked by logp, ties lexicographic
  double lower_bound = 0.0;
  double upper_bound = 1.0;
  bool upper_bound_informative = false;  // false whenever lower_bound == 0
  double bank = 0.0;                     // pruned variants only
  double covered_mass = 0.0;             // sum over finals
  double pruned_mass = 0.0;              // everything lost to across-beam prunes
  double eos_mass = 0.0;
  double nonviable_mass = 0.0;  // only filled when track_nonviable is set
  double open_mass = 0.0;       // live beam mass abandoned by a tau_min cutoff
  std::vector<EosRecord> eos_records;
  Termination termination;
  CostLedger cost;
  std::vector<std::string> warnings;

  std::size_t token_evals() const { return cost.total(); }
};

struct FilterMatch {
  std::size_t index = 0;  // into the finals list
  std::size_t distance = 0;
};

struct FilterResult {
  double lower_bound = 0.0;
  std::vector<FilterMatch> matched;
};

// Sum of probabilities over finals within `epsilon` of the target.
inline FilterResult postprocess_filter(std::span<const FinalCandidate> finals,
                                       std::span<const TokenId> target, DistanceKind dist,
                                       std::size_t epsilon) {
  FilterResult out;
  CompensatedSum lb;
  for (std::size_t i = 0; i < finals.size(); ++i) {
    if (finals[i].continuation.size() != target.size()) {
      throw InvalidInput("postprocess_filter: final length differs from target length");
    }
    const std::size_t d = distance(dist, finals[i].continuation, target);
    if (d <= epsilon) {
      lb.add(finals[i].prob());
      out.matched.push_back({i, d});
    }
  }
  out.lower_bound = lb.value();
  return out;
}

namespace detail {

template <class State>
struct BeamItem {
  TokenSeq continuation;
  double logp = 0.0;
  State aux;
};

// logp descending, then lexicographic token order.
template <class State>
bool ranks_before(const BeamItem<State>& a, const BeamItem<State>& b) {
  if (a.logp != b.logp) return a.logp > b.logp;
  return a.continuation < b.continuation;
}

inline std::vector<LogitRow> fetch_rows(const TokenDistributionProvider& provider,
                                        std::span<const TokenSeq> histories, std::size_t depth) {
  std::vector<LogitRow> rows;
  try {
    rows = provider.next_logits_batch(histories);
  } catch (ProviderError& e) {
    e.set_depth(depth);
    throw;
  } catch (const std::exception& e) {
    ProviderError wrapped(std::string("provider failure: ") + e.what());
    wrapped.set_depth(depth);
    throw wrapped;
  }
  const std::size_t v = provider.vocabulary().size;
  if (rows.size() != histories.size()) {
    ProviderError e("provider returned " + std::to_string(rows.size()) + " rows for " +
                    std::to_string(histories.size()) + " histories");
    e.set_depth(depth);
    throw e;
  }
  for (const auto& r : rows) {
    if (r.size() != v) {
      ProviderError e("provider returned a row of length " + std::to_string(r.size()));
      e.set_depth(depth);
      throw e;
    }
  }
  return rows;
}

inline void clamp_bounds(SearchOutcome& out) {
  out.lower_bound = std::clamp(out.lower_bound, 0.0, 1.0);
  out.upper_bound = std::clamp(out.upper_bound, out.lower_bound, 1.0);
  out.upper_bound_informative = out.lower_bound > 0.0;
}

}  // namespace detail

/**
 * Beam search under an arbitrary viability oracle. The returned outcome has
 * finals, ledgers, termination and cost filled in; bounds are left to the
 * caller (see kcbs()). Children whose epsilon_star exceeds `epsilon` are
 * discarded before ranking; pass UnconstrainedOracle for the plain search.
 */
template <ViabilityOracle Oracle>
SearchOutcome constrained_beam_search(const TokenDistributionProvider& provider,
                                      std::span<const TokenId> prefix, const Oracle& oracle,
                                      std::size_t epsilon, const SearchConfig& cfg) {
  using State = typename Oracle::State;
  using Item = detail::BeamItem<State>;

  const Vocabulary& vocab = provider.vocabulary();
  cfg.validate(vocab);
  if (prefix.empty()) throw InvalidInput("kcbs: prefix must be nonempty");
  for (TokenId tok : prefix) {
    if (!vocab.contains(tok)) throw InvalidInput("kcbs: prefix token outside vocabulary");
  }

  SearchOutcome out;
  out.variant = cfg.variant;
  const std::size_t k = cfg.policy.k;
  if (cfg.beam_width > k * k) {
    out.warnings.push_back("beam width " + std::to_string(cfg.beam_width) + " exceeds k^2 = " +
                           std::to_string(k * k));
  }
  const double tau_beam =
      cfg.tau_min ? *cfg.tau_min / static_cast<double>(cfg.beam_width * k) : 0.0;

  CompensatedSum covered, pruned, eos, nonviable, open;
  std::vector<Item> beam;
  beam.push_back(Item{{}, 0.0, oracle.init()});
  std::vector<Item> candidates;
  std::vector<TokenSeq> histories;

  for (std::size_t t = 1; t <= cfg.suffix_len; ++t) {
    histories.clear();
    for (const auto& item : beam) histories.push_back(concat(prefix, item.continuation));
    const std::vector<LogitRow> rows = detail::fetch_rows(provider, histories, t);
    if (t == 1) {
      out.cost.prefill_tokens += prefix.size();
    } else {
      out.cost.decode_tokens += beam.size();
    }

    candidates.clear();
    for (std::size_t i = 0; i < beam.size(); ++i) {
      const Item& parent = beam[i];
      StepDistribution step;
      try {
        step = topk_step(rows[i], cfg.policy);
      } catch (const InvalidInput& e) {
        ProviderError pe(std::string("bad logits: ") + e.what());
        pe.set_depth(t);
        throw pe;
      }
      for (std::size_t s = 0; s < step.support.size(); ++s) {
        const TokenId tok = step.support[s];
        const double child_logp = parent.logp + step.logprobs[s];
        auto [aux, star] = oracle.update(parent.aux, tok);
        if (star > epsilon) {
          if (cfg.track_nonviable) nonviable.add(std::exp(child_logp));
          continue;
        }
        Item child{parent.continuation, child_logp, std::move(aux)};
        child.continuation.push_back(tok);
        candidates.push_back(std::move(child));
      }
    }

    if (t == cfg.suffix_len) {
      std::sort(candidates.begin(), candidates.end(), detail::ranks_before<State>);
      for (auto& c : candidates) {
        if (!oracle.is_final(c.aux)) {
          if (cfg.track_nonviable) nonviable.add(std::exp(c.logp));
          continue;
        }
        covered.add(std::exp(c.logp));
        out.finals.push_back(
            FinalCandidate{std::move(c.continuation), c.logp, oracle.final_distance(c.aux)});
      }
      out.termination = {TerminationKind::Completed, t};
      break;
    }

    if (vocab.eos) {
      auto is_eos = [&](const Item& c) { return c.continuation.back() == *vocab.eos; };
      for (const auto& c : candidates) {
        if (!is_eos(c)) continue;
        eos.add(std::exp(c.logp));
        if (cfg.record_eos) out.eos_records.push_back({c.continuation, c.logp, t});
      }
      std::erase_if(candidates, is_eos);
    }
    if (candidates.empty()) {
      out.termination = {TerminationKind::EmptyViableSet, t};
      beam.clear();
      break;
    }

    const std::size_t keep = std::min(cfg.beam_width, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), detail::ranks_before<State>);
    for (std::size_t i = keep; i < candidates.size(); ++i) pruned.add(std::exp(candidates[i].logp));
    candidates.resize(keep);
    beam.swap(candidates);

    if (cfg.tau_min && std::exp(beam.front().logp) < tau_beam) {
      for (const auto& item : beam) open.add(std::exp(item.logp));
      out.termination = {TerminationKind::TauMinCutoff, t};
      break;
    }
  }

  out.covered_mass = covered.value();
  out.pruned_mass = pruned.value();
  out.eos_mass = eos.value();
  out.nonviable_mass = nonviable.value();
  out.open_mass = open.value();
  return out;
}

/**
 * Runs the configured variant and fills in the bounds.
 *
 * Baseline: LB is the filtered mass of finals against (dist, epsilon) when a
 * target is given, else 0; UB = LB + (1 - covered mass).
 * Pruned: LB is the mass of accepted finals; UB = LB + bank, plus the live
 * beam mass if a tau_min cutoff abandoned it.
 */
inline SearchOutcome kcbs(const TokenDistributionProvider& provider,
                          std::span<const TokenId> prefix,
                          std::optional<std::span<const TokenId>> target,
                          const SearchConfig& cfg) {
  if (target && target->size() != cfg.suffix_len) {
    throw InvalidInput("kcbs: target length " + std::to_string(target->size()) +
                       " != suffix length " + std::to_string(cfg.suffix_len));
  }
  const Variant& v = cfg.variant;
  SearchOutcome out;
  if (v.kind == VariantKind::Baseline) {
    out = constrained_beam_search(provider, prefix, UnconstrainedOracle{}, 0, cfg);
    if (target) {
      FilterResult f = postprocess_filter(out.finals, *target, v.dist, v.epsilon);
      for (auto& fin : out.finals) fin.distance = distance(v.dist, fin.continuation, *target);
      out.lower_bound = f.lower_bound;
    }
    out.upper_bound = out.lower_bound + (1.0 - out.covered_mass);
  } else {
    if (!target) throw InvalidInput("kcbs: pruned variants need a target suffix");
    TokenSeq tgt(target->begin(), target->end());
    if (v.dist == DistanceKind::Hamming) {
      out = constrained_beam_search(provider, prefix, HammingOracle(std::move(tgt), v.epsilon),
                                    v.epsilon, cfg);
    } else {
      out = constrained_beam_search(provider, prefix,
                                    LevenshteinOracle(std::move(tgt), v.epsilon), v.epsilon, cfg);
    }
    out.bank = out.pruned_mass;
    out.lower_bound = out.covered_mass;
    out.upper_bound = out.lower_bound + out.bank + out.open_mass;
  }
  detail::clamp_bounds(out);
  return out;
}

inline SearchOutcome kcbs(const TokenDistributionProvider& provider,
                          std::span<const TokenId> prefix, const SearchConfig& cfg) {
  return kcbs(provider, prefix, std::nullopt, cfg);
}

class MassAuditFailure : public std::runtime_error {
 public:
  MassAuditFailure(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

struct MassAudit {
  double covered = 0.0;
  double pruned = 0.0;
  double eos = 0.0;
  double nonviable = 0.0;
  double open = 0.0;
  double total = 0.0;
  double residual = 0.0;  // total - 1
};

/**
 * Checks that the frontier the search produced accounts for all probability
 * mass: covered + pruned + eos (+ non-viable, + abandoned live beam) = 1.
 * Pruned runs must have been made with track_nonviable. Throws
 * MassAuditFailure naming the residual when |total - 1| > tol.
 */
inline MassAudit mass_audit(const SearchOutcome& out, double tol = 1e-9) {
  MassAudit a;
  a.covered = out.covered_mass;
  a.pruned = out.pruned_mass;
  a.eos = out.eos_mass;
  a.nonviable = out.nonviable_mass;
  a.open = out.open_mass;
  CompensatedSum s;
  for (double x : {a.covered, a.pruned, a.eos, a.nonviable, a.open}) s.add(x);
  a.total = s.value();
  a.residual = a.total - 1.0;
  if (std::abs(a.residual) > tol) {
    throw MassAuditFailure("mass audit: covered " + std::to_string(a.covered) + " + pruned " +
                               std::to_string(a.pruned) + " + eos " + std::to_string(a.eos) +
                               " + nonviable " + std::to_string(a.nonviable) + " + open " +
                               std::to_string(a.open) + " leaves residual " +
                               std::to_string(a.residual),
                           a.residual);
  }
  return a;
}

}  // namespace xaudit
