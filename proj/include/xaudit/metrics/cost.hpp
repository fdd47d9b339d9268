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

// Token-evaluation cost model. One token evaluation is one token pushed
// through a forward pass; the prefix is prefilled once per method.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xaudit/metrics/metrics.hpp"

namespace xaudit {

inline std::uint64_t greedy_token_evals(std::uint64_t n_pre, std::uint64_t length) {
  return length == 0 ? 0 : n_pre + length - 1;
}

// Scoring a fixed suffix also evaluates its last token.
inline std::uint64_t teacher_forcing_token_evals(std::uint64_t n_pre, std::uint64_t length) {
  return n_pre + length;
}

// Without early termination or EOS every decode step carries B items.
inline std::uint64_t kcbs_token_evals(std::uint64_t n_pre, std::uint64_t length,
                                      std::uint64_t beam_width) {
  return length == 0 ? 0 : n_pre + (length - 1) * beam_width;
}

// M samples sharing one prefill.
inline std::uint64_t mc_token_evals(std::uint64_t n_pre, std::uint64_t length,
                                    std::uint64_t samples) {
  return length == 0 ? 0 : n_pre + samples * (length - 1);
}

struct CostRow {
  std::string method;
  std::uint64_t token_evals = 0;
  double vs_greedy = 0.0;
};

struct CostSummary {
  std::uint64_t search = 0;
  std::uint64_t greedy = 0;
  std::uint64_t teacher_forcing = 0;
  std::vector<CostRow> rows;
};

inline CostSummary cost_summary(std::span<const SequenceResult> results) {
  CostSummary s;
  for (const auto& r : results) {
    s.search += r.cost.search;
    s.greedy += r.cost.greedy;
    s.teacher_forcing += r.cost.teacher_forcing;
  }
  auto ratio = [&](std::uint64_t v) {
    return s.greedy == 0 ? 0.0 : static_cast<double>(v) / static_cast<double>(s.greedy);
  };
  s.rows = {{"greedy", s.greedy, ratio(s.greedy)},
            {"teacher_forcing", s.teacher_forcing, ratio(s.teacher_forcing)},
            {"kcbs", s.search, ratio(s.search)}};
  return s;
}

// Per-pair comparison across methods for the given settings.
inline std::vector<CostRow> cost_comparison(std::uint64_t n_pre, std::uint64_t length,
                                            std::uint64_t beam_width,
                                            std::span<const std::uint64_t> mc_samples) {
  const std::uint64_t g = greedy_token_evals(n_pre, length);
  auto ratio = [g](std::uint64_t v) {
    return g == 0 ? 0.0 : static_cast<double>(v) / static_cast<double>(g);
  };
  std::vector<CostRow> rows;
  rows.push_back({"greedy", g, 1.0});
  const std::uint64_t tf = teacher_forcing_token_evals(n_pre, length);
  rows.push_back({"teacher_forcing", tf, ratio(tf)});
  const std::uint64_t kc = kcbs_token_evals(n_pre, length, beam_width);
  rows.push_back({"kcbs_B" + std::to_string(beam_width), kc, ratio(kc)});
  for (std::uint64_t m : mc_samples) {
    const std::uint64_t v = mc_token_evals(n_pre, length, m);
    rows.push_back({"mc_M" + std::to_string(m), v, ratio(v)});
  }
  return rows;
}

}  // namespace xaudit
