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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "xaudit/distance/metrics.hpp"
#include "xaudit/distance/viability.hpp"
#include "xaudit/estimators/monte_carlo.hpp"
#include "xaudit/estimators/oracle.hpp"
#include "xaudit/estimators/sample_size.hpp"
#include "xaudit/metrics/cost.hpp"
#include "xaudit/model/teacher_force.hpp"
#include "xaudit/search/kcbs.hpp"

namespace {

using namespace xaudit;
using testing::random_model;
using testing::random_seq;

struct Verdict {
  bool ok = true;
  std::string detail;

  // Records the first failure only; later ones rarely add information.
  void check(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

SearchConfig config(std::size_t b, std::size_t k, std::size_t t, Variant v) {
  SearchConfig c;
  c.beam_width = b;
  c.policy = {k, 1.0};
  c.suffix_len = t;
  c.variant = v;
  return c;
}

constexpr DistanceKind kDists[] = {DistanceKind::Hamming, DistanceKind::Levenshtein};

Verdict oracle_equivalence() {
  Verdict v;
  std::size_t runs = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto model = random_model(seed, 6, 3);
    const TokenSeq prefix{static_cast<TokenId>(seed % 6), 2};
    std::mt19937_64 rng(seed);
    const TokenSeq target =
        seed % 2 ? random_seq(rng, 6, 5) : greedy_decode(model, prefix, 5).continuation;
    for (auto dist : kDists) {
      for (std::size_t eps = 0; eps <= 3; ++eps) {
        const double exact = oracle_exact_mass(model, prefix, target, {3, 1.0}, dist, eps);
        for (auto var : {Variant::baseline(dist, eps), Variant::pruned(dist, eps)}) {
          const auto out = kcbs(model, prefix, target, config(243, 3, 5, var));
          ++runs;
          if (var.kind == VariantKind::Baseline) {
            v.check(std::abs(out.covered_mass - 1.0) <= 1e-9,
                    fmt("covered mass %.17g on seed %g", out.covered_mass, double(seed)));
          }
          v.check(std::abs(out.lower_bound - exact) <= 1e-9,
                  var.label() + fmt(" eps=%g: LB %.17g vs oracle %.17g", double(eps),
                                    out.lower_bound, exact));
        }
      }
    }
  }
  if (v.ok) v.detail = std::to_string(runs) + " searches";
  return v;
}

Verdict bound_sandwich() {
  Verdict v;
  double worst = 0.0;
  std::size_t trials = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto model = random_model(1000 + seed, 6, 2 + seed % 2);
    const TokenSeq prefix{static_cast<TokenId>(seed % 6)};
    std::mt19937_64 rng(seed);
    const TokenSeq target =
        seed % 2 ? random_seq(rng, 6, 5) : greedy_decode(model, prefix, 5).continuation;
    for (auto dist : kDists) {
      const auto profile = oracle_mass_profile(model, prefix, target, {3, 1.0}, dist, 2);
      for (std::size_t eps = 0; eps <= 2; ++eps) {
        for (auto var : {Variant::baseline(dist, eps), Variant::pruned(dist, eps)}) {
          const auto out = kcbs(model, prefix, target, config(4, 3, 5, var));
          ++trials;
          const double slack = std::min(profile[eps] - out.lower_bound,
                                        out.upper_bound - profile[eps]);
          worst = std::min(worst, slack);
          v.check(slack >= -1e-9, var.label() + fmt(" seed %g eps %g: slack %.3g", double(seed),
                                                    double(eps), slack));
        }
      }
    }
  }
  if (v.ok) v.detail = std::to_string(trials) + " trials, worst slack " + fmt("%.3g", worst);
  return v;
}

Verdict mass_audit_identity() {
  Verdict v;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::optional<TokenId> eos = seed % 2 ? std::optional<TokenId>(5) : std::nullopt;
    const auto model = random_model(2000 + seed, 6, 2, eos);
    const auto out = kcbs(model, TokenSeq{0}, config(4, 3, 5, Variant::baseline()));
    const double total = out.covered_mass + out.pruned_mass + out.eos_mass;
    worst = std::max(worst, std::abs(total - 1.0));
    v.check(std::abs(total - 1.0) <= 1e-9, fmt("seed %g: total %.17g", double(seed), total));
  }
  if (v.ok) v.detail = "100 models, worst residual " + fmt("%.3g", worst);
  return v;
}

Verdict paper_constants() {
  Verdict v;
  v.check(hamming_ball_size(32000, 50, 1) == BigInt(1599951), "Hamming ball size");
  const double ps[] = {1e-1, 1e-2, 1e-3};
  const double deltas[] = {0.005, 0.05, 0.5};
  const std::uint64_t table[3][3] = {{51, 528, 5296}, {29, 299, 2995}, {7, 69, 693}};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const auto m = mc_detection_sample_size(ps[j], deltas[i]);
      v.check(m == table[i][j], fmt("detection size p=%g delta=%g gave %g", ps[j], deltas[i],
                                    double(m)));
    }
  }
  v.check(kcbs_token_evals(50, 50, 20) == 1030, "k-CBS token evaluations");
  v.check(greedy_token_evals(50, 50) == 99, "greedy token evaluations");
  // The count a real search records, not just the formula.
  const testing::HashedGaussianModel dense(64, 9);
  const auto run = kcbs(dense, TokenSeq(50, 3), config(20, 40, 50, Variant::baseline()));
  v.check(run.token_evals() == 1030, fmt("search recorded %g token evaluations",
                                         double(run.token_evals())));
  v.check(rank_budget(1e-3, 0.5, 50) == 9, "rank budget alpha=1/2");
  v.check(rank_budget(1e-3, 0.1, 50) == 3, "rank budget alpha=1/10");
  v.check(rank_budget_for_rank(1e-3, 40, 50) == 1, "rank budget at rank 40");
  v.check(std::abs(heavy_mass_floor(20) - 1.0 / 21.0) <= 1e-12, "heavy floor");
  if (v.ok) v.detail = "ball 1599951, table, 1030/99, (9,3,1), 1/21";
  return v;
}

Verdict distance_conformance() {
  Verdict v;
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t len = 1 + rng() % 10, eps = rng() % 6, vocab = 2 + rng() % 4;
    const TokenSeq target = random_seq(rng, vocab, len), stream = random_seq(rng, vocab, len);
    const auto D = testing::full_dp(stream, target);
    LevenshteinOracle o(target, eps);
    auto s = o.init();
    for (std::size_t i = 1; i <= len; ++i) {
      auto [next, star] = o.update(s, stream[i - 1]);
      s = std::move(next);
      const std::size_t row_min = *std::min_element(D[i].begin(), D[i].end());
      v.check((star <= eps) == (row_min <= eps), "viability differs from the full table");
      if (row_min <= eps) v.check(star == row_min, "row minimum differs from the full table");
    }
    v.check(o.is_final(s) == (D[len][len] <= eps), "final acceptance differs");
  }
  enum : TokenId { a, b, c, d };
  v.check(levenshtein_last_row(TokenSeq{b, c}, TokenSeq{a, b, c}) ==
              std::vector<std::size_t>{2, 2, 2, 1},
          "worked last row");
  LevenshteinOracle worked(TokenSeq{a, b, c, d}, 2);
  auto s = worked.init();
  std::vector<std::size_t> minima;
  for (TokenId t : {b, c, a, d}) {
    auto [next, star] = worked.update(s, t);
    s = std::move(next);
    minima.push_back(star);
  }
  v.check(minima == std::vector<std::size_t>{1, 1, 2, 2}, "worked row minima");
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t len = 1 + rng() % 12;
    const TokenSeq x = random_seq(rng, 5, len), y = random_seq(rng, 5, len);
    v.check(levenshtein(x, y) <= hamming(x, y), "Levenshtein exceeds Hamming");
    v.check(levenshtein(x, y) == testing::naive_levenshtein(x, y), "Levenshtein mismatch");
  }
  TokenSeq x(10);
  for (TokenId i = 0; i < 10; ++i) x[i] = i;
  TokenSeq y(x.begin() + 1, x.end());
  y.push_back(x.front());
  v.check(hamming(x, y) == 10 && levenshtein(x, y) == 2, "rotation instance");
  if (v.ok) v.detail = "1000 banded streams, worked tables, 1000 pairs, rotation (10, 2)";
  return v;
}

template <class Oracle>
void soundness(Verdict& v, std::size_t eps, DistanceKind kind, std::size_t& pruned_paths) {
  testing::for_each_sequence(3, 4, [&](const TokenSeq& target) {
    const Oracle o(target, eps);
    testing::for_each_sequence(3, 4, [&](const TokenSeq& full) {
      auto s = o.init();
      bool pruned = false;
      for (std::size_t t = 0; t < 4 && !pruned; ++t) {
        auto [next, star] = o.update(s, full[t]);
        s = std::move(next);
        pruned = star > eps;
      }
      pruned_paths += pruned ? 1 : 0;
      const bool viable = distance(kind, full, target) <= eps;
      v.check(!(pruned && viable), to_string(kind) + " pruned a viable path");
      if (!pruned) v.check(o.is_final(s) == viable, to_string(kind) + " final acceptance");
    });
  });
}

Verdict viability_soundness() {
  Verdict v;
  std::size_t pruned = 0;
  for (std::size_t eps : {0u, 1u, 2u}) {
    soundness<HammingOracle>(v, eps, DistanceKind::Hamming, pruned);
    soundness<LevenshteinOracle>(v, eps, DistanceKind::Levenshtein, pruned);
  }
  if (v.ok) v.detail = std::to_string(pruned) + " pruned completions, none viable";
  return v;
}

Verdict heavy_survival() {
  Verdict v;
  for (std::size_t b : {2u, 5u, 20u}) {
    for (std::size_t T : {8u, 20u}) {
      // Per-step probability q with q^T just above the floor, so the path
      // stays above it at every depth; competitors share the rest evenly.
      const double floor = heavy_mass_floor(b);
      const double q = std::pow(floor, 1.0 / static_cast<double>(T)) * 1.001;
      const std::size_t vocab = 50;
      LogitRow row(vocab, std::log((1.0 - q) / static_cast<double>(vocab - 1)));
      row[0] = std::log(q);
      const TableModel model(Vocabulary{vocab, std::nullopt}, row);
      const auto out = kcbs(model, TokenSeq{1}, config(b, vocab, T, Variant::baseline()));
      const TokenSeq heavy(T, 0);
      const bool present = std::any_of(out.finals.begin(), out.finals.end(),
                                       [&](const auto& f) { return f.continuation == heavy; });
      v.check(present, fmt("heavy path lost at B=%g T=%g", double(b), double(T)));
    }
  }
  if (v.ok) v.detail = "B in {2, 5, 20}, T in {8, 20}";
  return v;
}

Verdict early_termination() {
  Verdict v;
  std::size_t cutoffs = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    // Flat logits keep every beam item light, so the cutoff actually fires.
    const testing::HashedGaussianModel model(6, seed, 0.3);
    std::mt19937_64 rng(seed);
    const TokenSeq target = random_seq(rng, 6, 8);
    for (auto var : {Variant::baseline(DistanceKind::Levenshtein, 2),
                     Variant::pruned(DistanceKind::Levenshtein, 2)}) {
      auto cfg = config(3, 3, 8, var);
      cfg.tau_min = 0.01;
      if (kcbs(model, TokenSeq{0}, target, cfg).termination.kind != TerminationKind::TauMinCutoff) {
        continue;
      }
      ++cutoffs;
      cfg.tau_min.reset();
      const double lb = kcbs(model, TokenSeq{0}, target, cfg).lower_bound;
      worst = std::max(worst, lb);
      v.check(lb < 0.01, fmt("seed %g: full run LB %.6g", double(seed), lb));
    }
  }
  v.check(cutoffs > 0, "no cutoff fired, the check would be vacuous");
  if (v.ok) {
    v.detail = std::to_string(cutoffs) + " cutoffs, largest full-run LB " + fmt("%.3g", worst);
  }
  return v;
}

Verdict mc_statistics() {
  Verdict v;
  // Plant one sequence with growing weight until its exact mass under
  // full-support sampling lands in range.
  const TokenSeq planted{0, 3, 1, 4, 2, 5, 3};
  const TokenSeq prefix{planted.front()};
  const TokenSeq target(planted.begin() + 1, planted.end());
  const DecodingPolicy policy{6, 1.0};
  std::optional<NGramModel> model;
  double p = 0.0;
  for (double w = 1.0; w < 1e4 && !(p >= 0.05 && p <= 0.4); w *= 1.5) {
    RandomNGramSpec spec;
    spec.seed = 9;
    spec.order = 2;
    spec.planted = {{planted, w}};
    model.emplace(NGramModel::random(spec));
    p = oracle_exact_mass(*model, prefix, target, policy, DistanceKind::Hamming, 0);
  }
  if (!(p >= 0.05 && p <= 0.4)) {
    v.check(false, fmt("could not plant a sequence in range (p*=%.4g)", p));
    return v;
  }
  constexpr int kReplicates = 200;
  McConfig cfg;
  cfg.dist = DistanceKind::Hamming;
  cfg.epsilon = 0;
  cfg.samples = 2000;
  double mean = 0.0;
  for (int r = 0; r < kReplicates; ++r) {
    cfg.seed = 1000 + static_cast<std::uint64_t>(r);
    mean += mc_estimate(*model, prefix, target, policy, cfg).p_hat;
  }
  mean /= kReplicates;
  const double se = std::sqrt(p * (1 - p) / 2000.0 / kReplicates);
  v.check(std::abs(mean - p) <= 3 * se, fmt("mean %.6g vs p* %.6g (SE %.3g)", mean, p, se));

  cfg.samples = mc_detection_sample_size(p, 0.05);
  int zero = 0;
  for (int r = 0; r < kReplicates; ++r) {
    cfg.seed = 5000 + static_cast<std::uint64_t>(r);
    zero += mc_estimate(*model, prefix, target, policy, cfg).hits == 0 ? 1 : 0;
  }
  const double frac = static_cast<double>(zero) / kReplicates;
  const double limit = 0.05 + 3 * std::sqrt(0.05 * 0.95 / kReplicates);
  v.check(frac <= limit, fmt("zero-hit fraction %.3g above %.3g", frac, limit));
  if (v.ok) {
    v.detail = fmt("p*=%.4g, mean %.4g (%.2f SE), ", p, mean, (mean - p) / se) +
               fmt("zero-hit %.3g at M=%g", frac, double(cfg.samples));
  }
  return v;
}

Verdict shared_path_logp() {
  Verdict v;
  std::size_t shared = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto model = random_model(3000 + seed, 6, 3);
    std::mt19937_64 rng(seed);
    const TokenSeq prefix{0, 1};
    const TokenSeq target =
        seed % 2 ? random_seq(rng, 6, 6) : greedy_decode(model, prefix, 6).continuation;
    const auto base = kcbs(model, prefix, target, config(5, 3, 6, Variant::baseline()));
    std::map<TokenSeq, double> by_seq;
    for (const auto& f : base.finals) by_seq[f.continuation] = f.logp;
    for (auto dist : kDists) {
      const auto pr = kcbs(model, prefix, target, config(5, 3, 6, Variant::pruned(dist, 2)));
      for (const auto& f : pr.finals) {
        auto it = by_seq.find(f.continuation);
        if (it == by_seq.end()) continue;
        ++shared;
        v.check(std::bit_cast<std::uint64_t>(f.logp) == std::bit_cast<std::uint64_t>(it->second),
                fmt("seed %g: logp %.17g vs %.17g", double(seed), f.logp, it->second));
      }
    }
  }
  v.check(shared > 0, "no shared finals, the check would be vacuous");
  if (v.ok) v.detail = std::to_string(shared) + " shared finals";
  return v;
}

struct Criterion {
  int id;
  const char* name;
  std::optional<double> limit_s;
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "oracle equivalence without pruning", 5.0, oracle_equivalence},
      {2, "bound sandwich under pruning", std::nullopt, bound_sandwich},
      {3, "baseline mass audit", std::nullopt, mass_audit_identity},
      {4, "published constants", 1.0, paper_constants},
      {5, "distance conformance", 2.0, distance_conformance},
      {6, "exhaustive viability soundness", 30.0, viability_soundness},
      {7, "heavy-mass survival", std::nullopt, heavy_survival},
      {8, "early-termination soundness", std::nullopt, early_termination},
      {9, "Monte Carlo statistics", std::nullopt, mc_statistics},
      {10, "shared-path logp equality", std::nullopt, shared_path_logp},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_s && secs > *c.limit_s) {
      v.ok = false;
      v.detail = fmt("took %.2f s, limit %.0f s", secs, *c.limit_s);
    }
    failures += v.ok ? 0 : 1;
    std::printf("%s %2d %s (%.2f s): %s\n", v.ok ? "PASS" : "FAIL", c.id, c.name, secs,
                v.detail.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
