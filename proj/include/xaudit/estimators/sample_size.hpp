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

// Closed-form sample sizes and probability budgets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "xaudit/core.hpp"

namespace xaudit {

namespace detail {

// Ratios of logarithms that are mathematically integral (ln 1e-3 / ln 0.1)
// land a few ulps off. Snap to the integer before rounding.
inline double snap_integral(double q) {
  const double r = std::round(q);
  return std::abs(q - r) <= 1e-9 * std::max(1.0, std::abs(q)) ? r : q;
}

inline std::uint64_t checked_count(double v, const char* who) {
  if (!std::isfinite(v) || v > 9.0e18) throw InvalidInput(std::string(who) + ": result overflows");
  return static_cast<std::uint64_t>(v);
}

}  // namespace detail

// Smallest M with (1 - p)^M <= delta: at least one hit with prob >= 1 - delta.
inline std::uint64_t mc_detection_sample_size(double p, double delta) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidInput("mc_detection_sample_size: p must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidInput("mc_detection_sample_size: delta must lie in (0, 1)");
  }
  const double q = detail::snap_integral(std::log(1.0 / delta) / -std::log1p(-p));
  return detail::checked_count(std::ceil(q), "mc_detection_sample_size");
}

// Samples for relative standard error eta on a binomial proportion p.
inline std::uint64_t mc_relse_sample_size(double p, double eta) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidInput("mc_relse_sample_size: p must lie in (0, 1)");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidInput("mc_relse_sample_size: eta must be > 0");
  const double q = detail::snap_integral((1.0 - p) / (eta * eta * p));
  return detail::checked_count(std::ceil(q), "mc_relse_sample_size");
}

/**
 * Most steps with per-step probability <= alpha that a length-T sequence of
 * total probability >= tau can contain: floor(ln tau / ln alpha), capped at T.
 */
inline std::uint64_t rank_budget(double tau, double alpha, std::size_t length) {
  if (!(tau > 0.0 && tau <= 1.0)) throw InvalidInput("rank_budget: tau must lie in (0, 1]");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("rank_budget: alpha must lie in (0, 1)");
  const double q = detail::snap_integral(std::log(tau) / std::log(alpha));
  const double b = std::floor(q);
  return std::min<std::uint64_t>(detail::checked_count(b, "rank_budget"), length);
}

// Rank form: a token at rank >= R carries probability <= 1/R.
inline std::uint64_t rank_budget_for_rank(double tau, std::size_t rank, std::size_t length) {
  if (rank < 2) throw InvalidInput("rank_budget_for_rank: rank must be >= 2");
  return rank_budget(tau, 1.0 / static_cast<double>(rank), length);
}

// Cumulative probability above which a path survives every across-beam prune.
inline double heavy_mass_floor(std::size_t beam_width) {
  if (beam_width < 1) throw InvalidInput("heavy_mass_floor: beam width must be >= 1");
  return 1.0 / static_cast<double>(beam_width + 1);
}

// Minimum geometric-mean per-token probability of a length-T sequence with
// probability >= tau.
inline double geometric_mean_floor(double tau, std::size_t length) {
  if (!(tau > 0.0 && tau <= 1.0)) throw InvalidInput("geometric_mean_floor: tau must lie in (0, 1]");
  if (length < 1) throw InvalidInput("geometric_mean_floor: length must be >= 1");
  return std::pow(tau, 1.0 / static_cast<double>(length));
}

// Probability that M independent draws all miss a set of mass p.
inline double mc_miss_probability(double p, std::uint64_t samples) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("mc_miss_probability: p must lie in [0, 1]");
  if (samples == 0) return 1.0;
  return std::exp(static_cast<double>(samples) * std::log1p(-p));
}

}  // namespace xaudit
