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

// Corpus-level aggregation of per-sequence extraction results.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xaudit/core.hpp"
#include "xaudit/distance/metrics.hpp"

namespace xaudit {

struct CharSpan {
  std::size_t start = 0;  // byte offsets, half-open
  std::size_t end = 0;
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct CostBreakdown {
  std::size_t search = 0;
  std::size_t greedy = 0;
  std::size_t teacher_forcing = 0;
};

struct SequenceResult {
  std::string id;
  double verbatim_mass = 0.0;
  // Entry e: lower bound on the mass within distance e, e = 0..eps_max.
  std::vector<double> nearverbatim_mass;
  std::vector<double> upper_bound;  // optional, same indexing
  std::optional<std::size_t> greedy_distance;
  std::size_t token_evals = 0;
  CostBreakdown cost;
  std::optional<CharSpan> char_span;
  std::string termination = "completed";

  std::size_t eps_max() const {
    if (nearverbatim_mass.empty()) throw InvalidInput("SequenceResult: empty mass vector");
    return nearverbatim_mass.size() - 1;
  }
  double mass_at(std::size_t eps) const {
    if (eps >= nearverbatim_mass.size()) {
      throw InvalidInput("SequenceResult " + id + ": no mass recorded for epsilon " +
                         std::to_string(eps));
    }
    return nearverbatim_mass[eps];
  }
};

inline bool success_greedy(std::span<const TokenId> greedy, std::span<const TokenId> target,
                           DistanceKind dist, std::size_t epsilon) {
  return distance(dist, greedy, target) <= epsilon;
}

inline bool success_probabilistic(double mass, double tau_min) {
  if (!(mass >= 0.0 && mass <= 1.0)) throw InvalidInput("success_probabilistic: mass outside [0, 1]");
  if (!(tau_min > 0.0 && tau_min <= 1.0)) {
    throw InvalidInput("success_probabilistic: tau_min must lie in (0, 1]");
  }
  return mass >= tau_min;
}

using ResultPredicate = std::function<bool(const SequenceResult&)>;

inline double extraction_rate(std::span<const SequenceResult> results,
                              const ResultPredicate& predicate) {
  if (results.empty()) throw InvalidInput("extraction_rate: empty result set");
  std::size_t n = 0;
  for (const auto& r : results) n += predicate(r) ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(results.size());
}

// Probabilistic success at distance budget eps.
inline ResultPredicate mass_at_least(std::size_t eps, double tau_min) {
  return [eps, tau_min](const SequenceResult& r) {
    return success_probabilistic(std::clamp(r.mass_at(eps), 0.0, 1.0), tau_min);
  };
}

inline ResultPredicate greedy_within(std::size_t eps) {
  return [eps](const SequenceResult& r) { return r.greedy_distance && *r.greedy_distance <= eps; };
}

inline double mass_gain(const SequenceResult& r) {
  return r.mass_at(r.eps_max()) - r.mass_at(0);
}

struct ShellDecomposition {
  std::vector<double> shell_mass;
  std::vector<double> shell_share;  // empty-mass sequences get all zeros
  double verbatim_share = 0.0;
  double clamp_magnitude = 0.0;  // largest negative shell clamped to 0
};

// Shells are clamped at 0; a negative shell below -1e-9 means the mass
// vector decreased and is rejected as bad data.
inline ShellDecomposition shells(const SequenceResult& r, double clamp_tolerance = 1e-9) {
  const auto& m = r.nearverbatim_mass;
  if (m.empty()) throw InvalidInput("shells: empty mass vector");
  ShellDecomposition out;
  for (std::size_t e = 0; e < m.size(); ++e) {
    double d = e == 0 ? m[0] : m[e] - m[e - 1];
    if (d < 0.0) {
      out.clamp_magnitude = std::max(out.clamp_magnitude, -d);
      d = 0.0;
    }
    out.shell_mass.push_back(d);
  }
  if (out.clamp_magnitude > clamp_tolerance) {
    throw InvalidInput("shells: mass vector of " + r.id + " decreases by " +
                       std::to_string(out.clamp_magnitude));
  }
  const double total = m.back();
  out.shell_share.assign(m.size(), 0.0);
  if (total > 0.0) {
    CompensatedSum s;
    for (double d : out.shell_mass) s.add(d);
    const double denom = s.value();
    for (std::size_t e = 0; e < m.size(); ++e) out.shell_share[e] = out.shell_mass[e] / denom;
    out.verbatim_share = std::clamp(m[0] / total, 0.0, 1.0);
  }
  return out;
}

struct CcdfPoint {
  double x = 0.0;
  double y = 0.0;  // fraction of values >= x
};

inline std::vector<CcdfPoint> ccdf(std::span<const double> values,
                                   std::span<const double> thresholds) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<CcdfPoint> out;
  out.reserve(thresholds.size());
  for (double x : thresholds) {
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), x);
    const double n = static_cast<double>(sorted.end() - first);
    out.push_back({x, sorted.empty() ? 0.0 : n / static_cast<double>(sorted.size())});
  }
  return out;
}

// CCDF evaluated at each distinct value, ascending: a step function ready for
// plotting.
inline std::vector<CcdfPoint> ccdf_steps(std::span<const double> values) {
  std::vector<double> xs(values.begin(), values.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return ccdf(values, xs);
}

struct CoverageItem {
  CharSpan span;
  double mass = 0.0;
};

struct HeatmapCoverage {
  std::vector<double> value;      // per byte; 0 where nothing covers
  std::vector<bool> extractable;  // value >= tau_min
};

inline HeatmapCoverage heatmap_coverage(std::span<const CoverageItem> items,
                                        std::size_t text_length, double tau_min) {
  HeatmapCoverage out;
  out.value.assign(text_length, 0.0);
  out.extractable.assign(text_length, false);
  for (const auto& it : items) {
    if (it.span.start > it.span.end || it.span.end > text_length) {
      throw InvalidInput("heatmap_coverage: span [" + std::to_string(it.span.start) + ", " +
                         std::to_string(it.span.end) + ") outside text of length " +
                         std::to_string(text_length));
    }
    for (std::size_t i = it.span.start; i < it.span.end; ++i) {
      out.value[i] = std::max(out.value[i], it.mass);
    }
  }
  for (std::size_t i = 0; i < text_length; ++i) out.extractable[i] = out.value[i] >= tau_min;
  return out;
}

}  // namespace xaudit
