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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "xaudit/estimators/monte_carlo.hpp"
#include "xaudit/estimators/oracle.hpp"
#include "xaudit/estimators/sample_size.hpp"
#include "xaudit/model/teacher_force.hpp"

namespace xaudit {
namespace {

using testing::NaiveDist;
using testing::naive_ball_masses;
using testing::random_model;
using testing::random_seq;

TEST(SampleSize, DetectionTable) {
  const double ps[] = {1e-1, 1e-2, 1e-3};
  const double deltas[] = {0.005, 0.05, 0.5};
  const std::uint64_t expected[3][3] = {{51, 528, 5296}, {29, 299, 2995}, {7, 69, 693}};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_EQ(mc_detection_sample_size(ps[j], deltas[i]), expected[i][j])
          << "p=" << ps[j] << " delta=" << deltas[i];
    }
  }
}

TEST(SampleSize, DetectionSizeIsMinimal) {
  for (double p : {0.3, 0.05, 0.002}) {
    for (double d : {0.01, 0.1, 0.4}) {
      const auto m = mc_detection_sample_size(p, d);
      EXPECT_LE(mc_miss_probability(p, m), d * (1 + 1e-12));
      EXPECT_GT(mc_miss_probability(p, m - 1), d);
    }
  }
}

TEST(SampleSize, RelativeStandardError) {
  EXPECT_EQ(mc_relse_sample_size(1e-3, 0.1), 99900u);
  EXPECT_EQ(mc_relse_sample_size(0.5, 1.0), 1u);
  EXPECT_EQ(mc_relse_sample_size(1e-2, 0.1), 9900u);
}

TEST(SampleSize, RejectsOutOfRange) {
  EXPECT_THROW(mc_detection_sample_size(0.0, 0.05), InvalidInput);
  EXPECT_THROW(mc_detection_sample_size(1.0, 0.05), InvalidInput);
  EXPECT_THROW(mc_detection_sample_size(0.1, 0.0), InvalidInput);
  EXPECT_THROW(mc_relse_sample_size(0.1, 0.0), InvalidInput);
  EXPECT_THROW(rank_budget(0.0, 0.5, 10), InvalidInput);
  EXPECT_THROW(rank_budget(0.1, 1.0, 10), InvalidInput);
  EXPECT_THROW(rank_budget_for_rank(0.1, 1, 10), InvalidInput);
  EXPECT_THROW(heavy_mass_floor(0), InvalidInput);
}

TEST(RankBudget, Instantiations) {
  EXPECT_EQ(rank_budget(1e-3, 0.5, 50), 9u);
  EXPECT_EQ(rank_budget(1e-3, 0.1, 50), 3u);
  EXPECT_EQ(rank_budget_for_rank(1e-3, 40, 50), 1u);
  // Capped by the sequence length.
  EXPECT_EQ(rank_budget(1e-3, 0.9, 50), 50u);
  EXPECT_EQ(rank_budget(1.0, 0.5, 50), 0u);
  // ln(3^-5) / ln(1/3) evaluates to 4.999999999999999 in doubles.
  EXPECT_EQ(rank_budget(std::pow(3.0, -5), 1.0 / 3.0, 50), 5u);
  EXPECT_EQ(rank_budget(std::pow(3.0, -10), 1.0 / 3.0, 50), 10u);
}

TEST(Floors, HeavyAndGeometric) {
  EXPECT_NEAR(heavy_mass_floor(20), 0.047619047619047616, 1e-12);
  EXPECT_NEAR(geometric_mean_floor(1e-3, 50), 0.8709635899560806, 1e-12);
  EXPECT_DOUBLE_EQ(geometric_mean_floor(0.25, 2), 0.5);
}

TEST(Oracle, MatchesIndependentEnumerator) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto model = random_model(seed, 6, 3);
    std::mt19937_64 rng(seed);
    const TokenSeq prefix{static_cast<TokenId>(seed % 6)};
    const TokenSeq target = random_seq(rng, 6, 5);
    for (auto [dist, naive] : {std::pair{DistanceKind::Hamming, NaiveDist::Hamming},
                               std::pair{DistanceKind::Levenshtein, NaiveDist::Levenshtein}}) {
      const auto ref = naive_ball_masses(model, prefix, target, 3, naive, 5);
      const auto prof = oracle_mass_profile(model, prefix, target, {3, 1.0}, dist, 5);
      for (std::size_t e = 0; e <= 5; ++e) EXPECT_NEAR(prof[e], ref[e], 1e-12);
      EXPECT_NEAR(oracle_exact_mass(model, prefix, target, {3, 1.0}, dist, 2), ref[2], 1e-12);
    }
  }
}

TEST(Oracle, TemperatureAndEosAgreeWithEnumerator) {
  const auto model = random_model(41, 5, 2, TokenId{4});
  const TokenSeq target{0, 1, 2, 3};
  const auto ref = naive_ball_masses(model, TokenSeq{2}, target, 4, NaiveDist::Levenshtein, 4, 0.7);
  const auto prof =
      oracle_mass_profile(model, TokenSeq{2}, target, {4, 0.7}, DistanceKind::Levenshtein, 4);
  for (std::size_t e = 0; e <= 4; ++e) EXPECT_NEAR(prof[e], ref[e], 1e-12);
  EXPECT_LT(prof[4], 1.0 - 1e-6);  // EOS paths before depth T carry mass
}

TEST(Oracle, SaturatesAndReducesToTeacherForcing) {
  const auto model = random_model(9, 6, 3);
  const TokenSeq prefix{1}, target{0, 0, 1, 2, 0};
  const auto prof = oracle_mass_profile(model, prefix, target, {3, 1.0}, DistanceKind::Hamming, 5);
  EXPECT_NEAR(prof[5], 1.0, 1e-12);
  for (std::size_t e = 1; e < prof.size(); ++e) EXPECT_GE(prof[e], prof[e - 1]);
  EXPECT_NEAR(prof[0], teacher_force_verbatim(model, prefix, target, {3, 1.0}).prob(), 1e-15);
}

TEST(Oracle, GuardRefusesLargeTrees) {
  const auto model = random_model(1, 6, 2);
  const TokenSeq target(20, 0);
  try {
    oracle_exact_mass(model, TokenSeq{0}, target, {3, 1.0}, DistanceKind::Hamming, 1);
    FAIL() << "expected GuardRefused";
  } catch (const GuardRefused& e) {
    EXPECT_NEAR(e.estimated_size(), std::pow(3.0, 20), 1.0);
  }
  OracleOptions tight;
  tight.max_leaves = 100;
  EXPECT_THROW(oracle_exact_mass(model, TokenSeq{0}, TokenSeq(5, 0), {3, 1.0},
                                 DistanceKind::Hamming, 1, tight),
               GuardRefused);
  EXPECT_EQ(oracle_tree_size(3, 5), 243.0);
}

TEST(Wilson, KnownValues) {
  // 0 of 10 at 95%: upper = z^2 / (n + z^2).
  const double z = 1.9599639845400536;
  auto [lo, hi] = wilson_interval(0, 10, 0.95);
  EXPECT_EQ(lo, 0.0);
  EXPECT_NEAR(hi, z * z / (10 + z * z), 1e-12);
  auto [lo2, hi2] = wilson_interval(50, 100, 0.95);
  EXPECT_NEAR(lo2, 0.4038315303659957, 1e-12);
  EXPECT_NEAR(hi2, 0.5961684696340044, 1e-12);
  auto [lo3, hi3] = wilson_interval(10, 10, 0.95);
  EXPECT_NEAR(lo3, 10 / (10 + z * z), 1e-12);
  EXPECT_NEAR(hi3, 1.0, 1e-15);
  EXPECT_THROW(wilson_interval(11, 10, 0.95), InvalidInput);
}

TEST(Wilson, PooledEstimateConcatenatesReplicates) {
  const std::vector<McEstimate> reps{make_estimate(3, 100, 0.95), make_estimate(7, 200, 0.95)};
  const McEstimate pooled = mc_pool(reps, 0.95);
  EXPECT_EQ(pooled.hits, 10u);
  EXPECT_EQ(pooled.samples, 300u);
  EXPECT_DOUBLE_EQ(pooled.p_hat, 10.0 / 300.0);
  auto [lo, hi] = wilson_interval(10, 300, 0.95);
  EXPECT_EQ(pooled.ci_low, lo);
  EXPECT_EQ(pooled.ci_high, hi);
}

TEST(KeyedRng, UniformAndOrderIndependent) {
  EXPECT_EQ(keyed_uniform(1, 2, 3), keyed_uniform(1, 2, 3));
  EXPECT_NE(keyed_uniform(1, 2, 3), keyed_uniform(1, 3, 2));
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = keyed_uniform(7, static_cast<std::uint64_t>(i), 0);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

McConfig mc(std::uint64_t samples, std::uint64_t seed, std::size_t eps = 0,
            std::size_t workers = 1) {
  McConfig c;
  c.samples = samples;
  c.seed = seed;
  c.dist = DistanceKind::Hamming;
  c.epsilon = eps;
  c.workers = workers;
  return c;
}

TEST(MonteCarlo, DeterministicAndWorkerInvariant) {
  const auto model = random_model(3, 6, 2);
  const TokenSeq prefix{0}, target{0, 0, 1};
  const auto a = mc_estimate(model, prefix, target, {3, 1.0}, mc(5000, 11, 1));
  const auto b = mc_estimate(model, prefix, target, {3, 1.0}, mc(5000, 11, 1));
  const auto c = mc_estimate(model, prefix, target, {3, 1.0}, mc(5000, 11, 1, 4));
  EXPECT_EQ(a.hits, b.hits);
  EXPECT_EQ(a.hits, c.hits);
  EXPECT_EQ(a.p_hat, c.p_hat);
  const auto d = mc_estimate(model, prefix, target, {3, 1.0}, mc(5000, 12, 1));
  EXPECT_NE(a.hits, d.hits);
}

TEST(MonteCarlo, ConvergesToOracle) {
  const auto model = random_model(21, 5, 2);
  const TokenSeq prefix{1}, target = greedy_decode(model, prefix, 4).continuation;
  for (std::size_t eps : {0u, 1u}) {
    const double p =
        oracle_exact_mass(model, prefix, target, {3, 1.0}, DistanceKind::Hamming, eps);
    const auto est = mc_estimate(model, prefix, target, {3, 1.0}, mc(20000, 5, eps, 2));
    const double se = std::sqrt(p * (1 - p) / 20000);
    EXPECT_NEAR(est.p_hat, p, 4 * se);
    EXPECT_LE(est.ci_low, est.p_hat);
    EXPECT_GE(est.ci_high, est.p_hat);
  }
}

TEST(MonteCarlo, PointMassAlwaysHits) {
  TableModel model(Vocabulary{3, std::nullopt}, {5.0, 0.0, 0.0});
  const auto est = mc_estimate(model, TokenSeq{0}, TokenSeq{0, 0, 0}, {1, 1.0}, mc(200, 1));
  EXPECT_EQ(est.hits, 200u);
  EXPECT_EQ(est.p_hat, 1.0);
}

TEST(MonteCarlo, EarlyEosCountsAsMiss) {
  // EOS is the likeliest token at every step.
  TableModel model(Vocabulary{3, TokenId{0}}, {3.0, 0.0, 0.0});
  const auto est = mc_estimate(model, TokenSeq{1}, TokenSeq{0, 0, 0}, {3, 1.0}, mc(500, 2, 3));
  EXPECT_GT(est.early_eos, 0u);
  EXPECT_EQ(est.hits + est.early_eos, 500u);
}

TEST(MonteCarlo, RejectsBadConfig) {
  const auto model = random_model(3);
  EXPECT_THROW(mc_estimate(model, TokenSeq{0}, TokenSeq{0}, {3, 1.0}, mc(0, 1)), InvalidInput);
  EXPECT_THROW(mc_estimate(model, TokenSeq{}, TokenSeq{0}, {3, 1.0}, mc(10, 1)), InvalidInput);
  EXPECT_THROW(mc_estimate(model, TokenSeq{0}, TokenSeq{}, {3, 1.0}, mc(10, 1)), InvalidInput);
  auto bad = mc(10, 1);
  bad.confidence_level = 1.0;
  EXPECT_THROW(mc_estimate(model, TokenSeq{0}, TokenSeq{0}, {3, 1.0}, bad), InvalidInput);
}

}  // namespace
}  // namespace xaudit
