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

// JSONL storage for records and per-sequence results. Each line is one
// object; a "schema_version" field is optional on input and always written.

#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <span>
#include <string>
#include <vector>

#include "xaudit/corpus/records.hpp"
#include "xaudit/metrics/metrics.hpp"

namespace xaudit {

inline constexpr int kSchemaVersion = 1;

class CorpusFormatError : public InvalidInput {
 public:
  CorpusFormatError(const std::string& path, std::size_t line, const std::string& what)
      : InvalidInput(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SchemaVersionError : public CorpusFormatError {
 public:
  using CorpusFormatError::CorpusFormatError;
};

using nlohmann::json;

inline json to_json(const SequenceRecord& r) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["id"] = r.id;
  j["prefix"] = r.prefix;
  j["suffix"] = r.suffix;
  j["char_span"] = r.char_span ? json::array({r.char_span->start, r.char_span->end}) : json(nullptr);
  j["source"] = r.source;
  return j;
}

namespace detail {

inline std::optional<CharSpan> span_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_array() || j.size() != 2) throw InvalidInput("char_span must be [start, end] or null");
  CharSpan s{j[0].get<std::size_t>(), j[1].get<std::size_t>()};
  if (s.start > s.end) throw InvalidInput("char_span start exceeds end");
  return s;
}

inline json span_to_json(const std::optional<CharSpan>& s) {
  return s ? json::array({s->start, s->end}) : json(nullptr);
}

inline TokenSeq tokens_from_json(const json& j, const char* field) {
  if (!j.is_array()) throw InvalidInput(std::string(field) + " must be an array of token ids");
  TokenSeq out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number_unsigned()) {
      throw InvalidInput(std::string(field) + " holds a value that is not a token id");
    }
    out.push_back(v.get<TokenId>());
  }
  return out;
}

}  // namespace detail

inline SequenceRecord record_from_json(const json& j) {
  SequenceRecord r;
  r.id = j.at("id").get<std::string>();
  r.prefix = detail::tokens_from_json(j.at("prefix"), "prefix");
  r.suffix = detail::tokens_from_json(j.at("suffix"), "suffix");
  r.char_span = detail::span_from_json(j.value("char_span", json(nullptr)));
  r.source = j.value("source", std::string());
  return r;
}

inline json to_json(const SequenceResult& r) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["id"] = r.id;
  j["verbatim_mass"] = r.verbatim_mass;
  j["nearverbatim_mass"] = r.nearverbatim_mass;
  j["upper_bound"] = r.upper_bound;
  j["greedy_distance"] = r.greedy_distance ? json(*r.greedy_distance) : json(nullptr);
  j["token_evals"] = r.token_evals;
  j["cost"] = {{"search", r.cost.search},
               {"greedy", r.cost.greedy},
               {"teacher_forcing", r.cost.teacher_forcing}};
  j["char_span"] = detail::span_to_json(r.char_span);
  j["termination"] = r.termination;
  return j;
}

inline SequenceResult result_from_json(const json& j) {
  SequenceResult r;
  r.id = j.at("id").get<std::string>();
  r.verbatim_mass = j.at("verbatim_mass").get<double>();
  r.nearverbatim_mass = j.at("nearverbatim_mass").get<std::vector<double>>();
  r.upper_bound = j.value("upper_bound", std::vector<double>{});
  const json& g = j.value("greedy_distance", json(nullptr));
  if (!g.is_null()) r.greedy_distance = g.get<std::size_t>();
  r.token_evals = j.value("token_evals", std::size_t{0});
  if (j.contains("cost")) {
    const json& c = j.at("cost");
    r.cost = {c.value("search", std::size_t{0}), c.value("greedy", std::size_t{0}),
              c.value("teacher_forcing", std::size_t{0})};
  }
  r.char_span = detail::span_from_json(j.value("char_span", json(nullptr)));
  r.termination = j.value("termination", std::string("completed"));
  for (double m : r.nearverbatim_mass) {
    if (!(m >= 0.0 && m <= 1.0)) throw InvalidInput("mass outside [0, 1]");
  }
  return r;
}

/**
 * Calls `on_line` for every nonblank line, parsed, skipping provenance
 * header lines. Any parse or schema failure is rethrown with the path and
 * 1-based line number.
 */
inline void read_jsonl(const std::filesystem::path& path,
                       const std::function<void(const json&)>& on_line) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw CorpusFormatError(path.string(), n, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw CorpusFormatError(path.string(), n, "line is not a JSON object");
    if (j.contains("schema_version")) {
      const json& v = j.at("schema_version");
      if (!v.is_number_integer() || v.get<int>() != kSchemaVersion) {
        throw SchemaVersionError(path.string(), n,
                                 "unsupported schema_version " + v.dump() + " (expected " +
                                     std::to_string(kSchemaVersion) + ")");
      }
    }
    if (j.contains("provenance")) continue;  // header written by the CLI
    try {
      on_line(j);
    } catch (const json::exception& e) {
      throw CorpusFormatError(path.string(), n, e.what());
    } catch (const CorpusFormatError&) {
      throw;
    } catch (const InvalidInput& e) {
      throw CorpusFormatError(path.string(), n, e.what());
    }
  }
}

inline std::vector<SequenceRecord> load_records(const std::filesystem::path& path) {
  std::vector<SequenceRecord> out;
  read_jsonl(path, [&](const json& j) { out.push_back(record_from_json(j)); });
  return out;
}

inline std::vector<SequenceResult> load_results(const std::filesystem::path& path) {
  std::vector<SequenceResult> out;
  read_jsonl(path, [&](const json& j) { out.push_back(result_from_json(j)); });
  return out;
}

// `provenance`, when given, is written first as {"provenance": ...}.
template <class T>
void write_jsonl(const std::filesystem::path& path, std::span<const T> items,
                 const json* provenance = nullptr) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidInput("cannot write " + path.string());
  if (provenance) {
    out << json{{"schema_version", kSchemaVersion}, {"provenance", *provenance}}.dump() << '\n';
  }
  for (const auto& it : items) out << to_json(it).dump() << '\n';
  if (!out) throw InvalidInput("write failed: " + path.string());
}

inline void save_records(const std::filesystem::path& path,
                         std::span<const SequenceRecord> records) {
  write_jsonl(path, records);
}

inline void save_results(const std::filesystem::path& path,
                         std::span<const SequenceResult> results,
                         const json* provenance = nullptr) {
  write_jsonl(path, results, provenance);
}

}  // namespace xaudit
