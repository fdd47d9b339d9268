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

// Summary JSON and plot-data CSV for a finished audit.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "xaudit/cli/config.hpp"
#include "xaudit/metrics/cost.hpp"
#include "xaudit/metrics/metrics.hpp"

namespace xaudit::cli {

// Round-trip precision, so CSV values reproduce the JSON ones exactly.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline nlohmann::json provenance(const ExperimentConfig& cfg, const std::string& input_hash) {
  return {{"config", cfg.to_json()}, {"input_hash", input_hash}};
}

inline nlohmann::json build_summary(std::span<const SequenceResult> results,
                                    const ExperimentConfig& cfg, const std::string& input_hash) {
  nlohmann::json s = provenance(cfg, input_hash);
  s["schema_version"] = 1;
  s["sequences"] = results.size();
  if (results.empty()) return s;

  nlohmann::json rates = nlohmann::json::array();
  for (std::size_t e = 0; e <= cfg.epsilon; ++e) {
    CompensatedSum mass;
    for (const auto& r : results) mass.add(r.mass_at(e));
    rates.push_back({{"epsilon", e},
                     {"probabilistic", extraction_rate(results, mass_at_least(e, cfg.tau_min))},
                     {"greedy", extraction_rate(results, greedy_within(e))},
                     {"mean_mass", mass.value() / static_cast<double>(results.size())}});
  }
  s["rates"] = rates;
  s["verbatim_rate"] = extraction_rate(results, [&](const SequenceResult& r) {
    return success_probabilistic(r.verbatim_mass, cfg.tau_min);
  });

  std::vector<double> gains;
  for (const auto& r : results) gains.push_back(mass_gain(r));
  nlohmann::json ccdf_json = nlohmann::json::array();
  for (const auto& p : ccdf_steps(gains)) ccdf_json.push_back({p.x, p.y});
  CompensatedSum gain_sum;
  for (double g : gains) gain_sum.add(g);
  s["mass_gain"] = {{"mean", gain_sum.value() / static_cast<double>(gains.size())},
                    {"ccdf", ccdf_json}};

  // Shares only over sequences with some mass in the largest ball.
  std::vector<CompensatedSum> share_sum(cfg.epsilon + 1);
  std::size_t with_mass = 0;
  for (const auto& r : results) {
    if (r.nearverbatim_mass.back() <= 0.0) continue;
    const auto sh = shells(r);
    ++with_mass;
    for (std::size_t e = 0; e < sh.shell_share.size(); ++e) share_sum[e].add(sh.shell_share[e]);
  }
  nlohmann::json mean_share = nlohmann::json::array();
  for (auto& v : share_sum) {
    mean_share.push_back(with_mass ? v.value() / static_cast<double>(with_mass) : 0.0);
  }
  s["shell_share_mean"] = mean_share;
  s["sequences_with_mass"] = with_mass;

  std::map<std::string, std::size_t> term;
  for (const auto& r : results) ++term[r.termination];
  s["terminations"] = term;

  const CostSummary cost = cost_summary(results);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : cost.rows) {
    rows.push_back({{"method", row.method}, {"token_evals", row.token_evals}, {"vs_greedy", row.vs_greedy}});
  }
  s["cost"] = {{"search", cost.search},
               {"greedy", cost.greedy},
               {"teacher_forcing", cost.teacher_forcing},
               {"rows", rows}};
  return s;
}

inline void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << body;
}

inline void write_ccdf_csv(const std::filesystem::path& path,
                           std::span<const SequenceResult> results) {
  std::vector<double> gains;
  for (const auto& r : results) gains.push_back(mass_gain(r));
  std::string body = "mass_gain,fraction_at_least\n";
  for (const auto& p : ccdf_steps(gains)) body += fmt(p.x) + "," + fmt(p.y) + "\n";
  write_text(path, body);
}

inline void write_shares_csv(const std::filesystem::path& path,
                             std::span<const SequenceResult> results) {
  std::string body = "id,epsilon,shell_mass,shell_share,verbatim_share\n";
  for (const auto& r : results) {
    if (r.nearverbatim_mass.back() <= 0.0) continue;
    const auto sh = shells(r);
    for (std::size_t e = 0; e < sh.shell_mass.size(); ++e) {
      body += r.id + "," + std::to_string(e) + "," + fmt(sh.shell_mass[e]) + "," +
              fmt(sh.shell_share[e]) + "," + fmt(sh.verbatim_share) + "\n";
    }
  }
  write_text(path, body);
}

// Per-byte maximum over covering suffixes, one block per source. Records are
// grouped by the source label in their id (text before the last '@').
inline bool write_heatmap_csv(const std::filesystem::path& path,
                              std::span<const SequenceResult> results, double tau_min,
                              const std::map<std::string, std::size_t>& text_lengths) {
  std::map<std::string, std::vector<const SequenceResult*>> by_source;
  for (const auto& r : results) {
    if (!r.char_span) continue;
    const auto at = r.id.rfind('@');
    by_source[at == std::string::npos ? std::string() : r.id.substr(0, at)].push_back(&r);
  }
  if (by_source.empty()) return false;
  std::string body = "source,position,verbatim,nearverbatim,extractable\n";
  for (const auto& [source, rs] : by_source) {
    std::size_t len = 0;
    if (auto it = text_lengths.find(source); it != text_lengths.end()) {
      len = it->second;
    } else {
      for (const auto* r : rs) len = std::max(len, r->char_span->end);
    }
    std::vector<CoverageItem> verb, near;
    for (const auto* r : rs) {
      verb.push_back({*r->char_span, r->verbatim_mass});
      near.push_back({*r->char_span, r->nearverbatim_mass.back()});
    }
    const auto hv = heatmap_coverage(verb, len, tau_min);
    const auto hn = heatmap_coverage(near, len, tau_min);
    for (std::size_t i = 0; i < len; ++i) {
      body += source + "," + std::to_string(i) + "," + fmt(hv.value[i]) + "," + fmt(hn.value[i]) +
              "," + (hn.extractable[i] ? "1" : "0") + "\n";
    }
  }
  write_text(path, body);
  return true;
}

}  // namespace xaudit::cli
