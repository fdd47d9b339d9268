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

// Drives per-sequence audits over a corpus with a worker pool and an
// append-only checkpoint.

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "xaudit/cli/config.hpp"
#include "xaudit/corpus/jsonl.hpp"
#include "xaudit/corpus/records.hpp"
#include "xaudit/metrics/cost.hpp"
#include "xaudit/metrics/metrics.hpp"
#include "xaudit/model/provider.hpp"
#include "xaudit/model/teacher_force.hpp"
#include "xaudit/search/kcbs.hpp"

namespace xaudit::cli {

// Rejects records that do not fit the configuration or the vocabulary
// before any model call is made.
inline void validate_records(std::span<const SequenceRecord> records, const ExperimentConfig& cfg,
                             const Vocabulary& vocab) {
  std::set<std::string> ids;
  for (const auto& r : records) {
    if (!ids.insert(r.id).second) throw InvalidInput("duplicate record id '" + r.id + "'");
    if (r.prefix.size() != cfg.prefix_len) {
      throw InvalidInput("record " + r.id + ": prefix has " + std::to_string(r.prefix.size()) +
                         " tokens, --prefix-len is " + std::to_string(cfg.prefix_len));
    }
    if (r.suffix.size() != cfg.suffix_len) {
      throw InvalidInput("record " + r.id + ": suffix has " + std::to_string(r.suffix.size()) +
                         " tokens, --suffix-len is " + std::to_string(cfg.suffix_len));
    }
    for (const auto* seq : {&r.prefix, &r.suffix}) {
      for (TokenId t : *seq) {
        if (!vocab.contains(t)) {
          throw InvalidInput("record " + r.id + ": token " + std::to_string(t) +
                             " outside vocabulary of size " + std::to_string(vocab.size));
        }
      }
    }
  }
  cfg.search_config().validate(vocab);
}

/**
 * One sequence: k-CBS for near-verbatim lower bounds at every budget
 * 0..epsilon, teacher forcing for the exact verbatim probability, and greedy
 * decoding for the deterministic criterion.
 *
 * If the verbatim target is not among the finals its exact probability is
 * added to every lower bound: it is a distinct member of each ball.
 */
inline SequenceResult audit_sequence(const TokenDistributionProvider& provider,
                                     const SequenceRecord& record, const ExperimentConfig& cfg) {
  const SearchConfig sc = cfg.search_config();
  const DistanceKind dist = cfg.distance_kind();
  const SearchOutcome out = kcbs(provider, record.prefix, record.suffix, sc);
  const LogProb pz = teacher_force_verbatim(provider, record.prefix, record.suffix, sc.policy);
  const GreedyDecode greedy = greedy_decode(provider, record.prefix, cfg.suffix_len);

  std::vector<CompensatedSum> shell(cfg.epsilon + 1);
  bool verbatim_found = false;
  for (const auto& f : out.finals) {
    const std::size_t d = f.distance ? *f.distance : distance(dist, f.continuation, record.suffix);
    if (d == 0) verbatim_found = true;
    if (d <= cfg.epsilon) shell[d].add(f.prob());
  }

  SequenceResult r;
  r.id = record.id;
  r.verbatim_mass = pz.prob();
  r.char_span = record.char_span;
  r.termination = to_string(out.termination.kind);
  CompensatedSum found;  // finals only
  const double extra = verbatim_found ? 0.0 : r.verbatim_mass;
  const double unexplored = 1.0 - out.covered_mass;
  for (std::size_t e = 0; e <= cfg.epsilon; ++e) {
    found.add(shell[e].value());
    const double lb = std::clamp(found.value() + extra, 0.0, 1.0);
    r.nearverbatim_mass.push_back(lb);
    // Baseline: loose bound from unexplored mass, which already holds a
    // missing verbatim path. Pruned: the bound at the full budget also
    // bounds every smaller ball.
    const double ub = sc.variant.kind == VariantKind::Baseline ? found.value() + unexplored
                                                               : out.upper_bound;
    r.upper_bound.push_back(std::clamp(std::max(ub, lb), 0.0, 1.0));
  }
  r.greedy_distance = distance(dist, greedy.continuation, record.suffix);
  r.cost.search = out.token_evals();
  r.cost.greedy = greedy.token_evals;
  r.cost.teacher_forcing = teacher_forcing_token_evals(record.prefix.size(), cfg.suffix_len);
  r.token_evals = r.cost.search;
  return r;
}

struct CheckpointState {
  std::vector<SequenceResult> done;
};

inline constexpr const char* kCheckpointKey = "checkpoint_input_hash";

// Loads finished results from a checkpoint written for the same inputs.
inline CheckpointState load_checkpoint(const std::filesystem::path& path,
                                       const std::string& input_hash) {
  CheckpointState st;
  if (!std::filesystem::exists(path)) return st;
  bool header = false;
  read_jsonl(path, [&](const nlohmann::json& j) {
    if (j.contains(kCheckpointKey)) {
      if (j.at(kCheckpointKey).get<std::string>() != input_hash) {
        throw InvalidInput("checkpoint " + path.string() +
                           " was written for different inputs; remove it to start over");
      }
      header = true;
      return;
    }
    if (!header) throw InvalidInput("checkpoint has no header line");
    st.done.push_back(result_from_json(j));
  });
  return st;
}

struct CorpusRun {
  std::vector<SequenceResult> results;  // sorted by id
  std::size_t resumed = 0;              // taken from the checkpoint
};

/**
 * Audits every record not already in the checkpoint, appending each result
 * as it finishes. On failure the finished results stay on disk and the first
 * error is rethrown. Output order is by id regardless of completion order.
 */
inline CorpusRun run_corpus(
    std::span<const SequenceRecord> records, const ExperimentConfig& cfg,
    const std::string& input_hash, const std::filesystem::path& checkpoint,
    const std::function<SequenceResult(const SequenceRecord&)>& audit) {
  CorpusRun run;
  CheckpointState st;
  if (!checkpoint.empty()) st = load_checkpoint(checkpoint, input_hash);
  std::set<std::string> done_ids;
  for (auto& r : st.done) {
    if (done_ids.insert(r.id).second) run.results.push_back(std::move(r));
  }
  run.resumed = run.results.size();

  std::vector<const SequenceRecord*> pending;
  for (const auto& r : records) {
    if (!done_ids.count(r.id)) pending.push_back(&r);
  }

  std::ofstream ckpt;
  if (!checkpoint.empty()) {
    const bool fresh =
        !std::filesystem::exists(checkpoint) || std::filesystem::file_size(checkpoint) == 0;
    ckpt.open(checkpoint, std::ios::app);
    if (!ckpt) throw InvalidInput("cannot write checkpoint " + checkpoint.string());
    if (fresh) {
      ckpt << nlohmann::json{{"schema_version", kSchemaVersion}, {kCheckpointKey, input_hash}}.dump()
           << '\n'
           << std::flush;
    }
  }

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;
  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= pending.size()) return;
      try {
        SequenceResult res = audit(*pending[i]);
        std::lock_guard lock(mu);
        if (ckpt.is_open()) ckpt << to_json(res).dump() << '\n' << std::flush;
        run.results.push_back(std::move(res));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first_error) first_error = std::current_exception();
        stop = true;
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(cfg.workers, pending.size()));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::sort(run.results.begin(), run.results.end(),
            [](const SequenceResult& a, const SequenceResult& b) { return a.id < b.id; });
  return run;
}

}  // namespace xaudit::cli
