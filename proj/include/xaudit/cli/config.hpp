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

#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "xaudit/distance/metrics.hpp"
#include "xaudit/search/kcbs.hpp"

namespace xaudit::cli {

inline constexpr const char* kEndpointEnv = "EXTRACTION_AUDIT_ENDPOINT";

// Everything that determines an audit's outputs, plus two execution knobs
// (workers, out_dir) that do not.
struct ExperimentConfig {
  // provider: exactly one of these
  std::string provider_file;
  std::string endpoint;

  // corpus: records JSONL, or raw text plus tokenizer
  std::string records_file;
  std::string text_file;
  std::string tokenizer = "byte";
  std::size_t stride = 20;

  std::size_t beam_width = 20;
  std::size_t top_k = 40;
  double temperature = 1.0;
  std::size_t suffix_len = 50;
  std::size_t prefix_len = 50;
  std::string variant = "baseline";  // baseline | ham | lev
  std::string distance = "lev";      // distance the baseline is filtered with
  std::size_t epsilon = 5;           // largest budget reported
  double tau_min = 0.001;            // extraction threshold for rates
  bool early_stop = true;            // also cut searches that cannot reach tau_min
  bool record_eos = true;
  std::uint64_t seed = 0;

  // mc
  std::uint64_t samples = 1000;
  std::size_t replicates = 1;
  double confidence = 0.95;

  // oracle
  double oracle_max_leaves = 1e7;

  std::size_t workers = 1;
  std::string out_dir = "out";

  DistanceKind distance_kind() const {
    if (variant == "ham") return DistanceKind::Hamming;
    if (variant == "lev") return DistanceKind::Levenshtein;
    return parse_distance_kind(distance);
  }

  Variant search_variant() const {
    if (variant == "baseline") return Variant::baseline(distance_kind(), epsilon);
    return Variant::pruned(distance_kind(), epsilon);
  }

  SearchConfig search_config() const {
    SearchConfig s;
    s.beam_width = beam_width;
    s.policy = {top_k, temperature};
    s.suffix_len = suffix_len;
    s.variant = search_variant();
    if (early_stop) s.tau_min = tau_min;
    s.record_eos = record_eos;
    return s;
  }

  // Checks that need no provider; vocabulary checks happen after connecting.
  void validate() const {
    if (provider_file.empty() == endpoint.empty()) {
      throw InvalidInput("give exactly one of --provider or --endpoint (or set " +
                         std::string(kEndpointEnv) + ")");
    }
    if (variant != "baseline" && variant != "ham" && variant != "lev") {
      throw InvalidInput("--variant must be baseline, ham or lev");
    }
    (void)parse_distance_kind(distance);
    if (tokenizer != "byte" && tokenizer != "whitespace") {
      throw InvalidInput("--tokenizer must be byte or whitespace");
    }
    if (beam_width < 1) throw InvalidInput("--beam-width must be >= 1");
    if (top_k < 1) throw InvalidInput("--top-k must be >= 1");
    if (!(temperature > 0.0)) throw InvalidInput("--temperature must be > 0");
    if (suffix_len < 1 || prefix_len < 1) throw InvalidInput("lengths must be >= 1");
    if (epsilon > suffix_len) throw InvalidInput("--epsilon exceeds --suffix-len");
    if (!(tau_min > 0.0 && tau_min <= 1.0)) {
      throw InvalidInput("--tau-min must lie in (0, 1]");
    }
    if (stride < 1) throw InvalidInput("--stride must be >= 1");
    if (samples < 1) throw InvalidInput("--samples must be >= 1");
    if (replicates < 1) throw InvalidInput("--replicates must be >= 1");
    if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidInput("--confidence must lie in (0, 1)");
    if (workers < 1) throw InvalidInput("--workers must be >= 1");
  }

  // The resolved configuration as embedded in outputs. Execution-only knobs
  // are left out so that outputs depend on inputs alone.
  nlohmann::json to_json() const {
    nlohmann::json j;
    j["provider"] = provider_file.empty() ? nlohmann::json{{"endpoint", endpoint}}
                                          : nlohmann::json{{"file", provider_file}};
    j["corpus"] = records_file.empty()
                      ? nlohmann::json{{"text", text_file}, {"tokenizer", tokenizer}, {"stride", stride}}
                      : nlohmann::json{{"records", records_file}};
    j["search"] = {{"beam_width", beam_width},
                   {"top_k", top_k},
                   {"temperature", temperature},
                   {"suffix_len", suffix_len},
                   {"prefix_len", prefix_len},
                   {"variant", variant},
                   {"distance", to_string(distance_kind())},
                   {"epsilon", epsilon},
                   {"tau_min", tau_min},
                   {"early_stop", early_stop},
                   {"record_eos", record_eos}};
    j["mc"] = {{"samples", samples}, {"replicates", replicates}, {"confidence", confidence}};
    j["oracle"] = {{"max_leaves", oracle_max_leaves}};
    j["seed"] = seed;
    return j;
  }
};

}  // namespace xaudit::cli
