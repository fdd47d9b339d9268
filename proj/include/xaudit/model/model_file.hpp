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

// JSON files describing synthetic models:
//
//   {"type": "table", "vocab_size": 4, "eos_id": null,
//    "default": [0, 0, 0, 0],
//    "rows": [{"history": [1, 2], "logits": [3, 1, 0, 0]}]}
//
//   {"type": "ngram", "vocab_size": 6, "eos_id": null, "order": 2,
//    "corpus": [[0, 1, 2], ...], "planted": [{"tokens": [...], "weight": 5}]}
//
//   {"type": "random_ngram", "vocab_size": 6, "order": 2, "sequences": 8,
//    "sequence_length": 12, "skew": 2.0, "seed": 7, "planted": [...]}

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xaudit/model/synthetic.hpp"

namespace xaudit {

namespace detail {

inline std::optional<TokenId> eos_from_json(const nlohmann::json& j) {
  if (!j.contains("eos_id") || j.at("eos_id").is_null()) return std::nullopt;
  return j.at("eos_id").get<TokenId>();
}

inline std::vector<PlantedSequence> planted_from_json(const nlohmann::json& j) {
  std::vector<PlantedSequence> out;
  if (!j.contains("planted")) return out;
  for (const auto& p : j.at("planted")) {
    out.push_back({p.at("tokens").get<TokenSeq>(), p.value("weight", 1.0)});
  }
  return out;
}

}  // namespace detail

inline std::unique_ptr<TokenDistributionProvider> model_from_json(const nlohmann::json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    const std::size_t v = j.at("vocab_size").get<std::size_t>();
    const Vocabulary vocab{v, detail::eos_from_json(j)};
    if (type == "table") {
      auto m = std::make_unique<TableModel>(vocab, j.at("default").get<LogitRow>());
      if (j.contains("rows")) {
        for (const auto& r : j.at("rows")) {
          m->set(r.at("history").get<TokenSeq>(), r.at("logits").get<LogitRow>());
        }
      }
      return m;
    }
    if (type == "ngram") {
      const auto corpus = j.at("corpus").get<std::vector<TokenSeq>>();
      const auto planted = detail::planted_from_json(j);
      return std::make_unique<NGramModel>(vocab, j.at("order").get<std::size_t>(), corpus, planted);
    }
    if (type == "random_ngram") {
      RandomNGramSpec spec;
      spec.vocab_size = v;
      spec.eos = vocab.eos;
      spec.order = j.value("order", spec.order);
      spec.sequences = j.value("sequences", spec.sequences);
      spec.sequence_length = j.value("sequence_length", spec.sequence_length);
      spec.skew = j.value("skew", spec.skew);
      spec.seed = j.value("seed", spec.seed);
      spec.planted = detail::planted_from_json(j);
      return std::make_unique<NGramModel>(NGramModel::random(spec));
    }
    throw InvalidInput("unknown model type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("bad model description: ") + e.what());
  }
}

inline std::unique_ptr<TokenDistributionProvider> load_model_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open model file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("model file " + path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

inline nlohmann::json to_json(const TableModel& m) {
  nlohmann::json j;
  j["type"] = "table";
  j["vocab_size"] = m.vocabulary().size;
  j["eos_id"] = m.vocabulary().eos ? nlohmann::json(*m.vocabulary().eos) : nlohmann::json(nullptr);
  j["default"] = m.default_row();
  j["rows"] = nlohmann::json::array();
  for (const auto& [h, row] : m.rows()) j["rows"].push_back({{"history", h}, {"logits", row}});
  return j;
}

}  // namespace xaudit
