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

// Client for the logits bridge wire protocol (JSON over HTTP):
//
//   GET  /v1/meta   -> {"protocol": 1, "vocab_size": N, "eos_id": int|null,
//                       "model_name": "..."}
//   POST /v1/logits {"histories": [[int, ...], ...]}
//                   -> {"logits": [[float, ...], ...]}
//
// Rows arrive at float32 precision; log-softmax is re-derived in float64.

#include <httplib.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <json.hpp>
#include <span>
#include <string>
#include <vector>

#include "xaudit/model/provider.hpp"

namespace xaudit {

inline constexpr int kWireProtocolVersion = 1;
inline constexpr std::size_t kMaxWireBatch = 64;

class ConnectionError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

class ProtocolError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

class ProtocolVersionError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

// A row whose length disagrees with the handshake vocabulary. Also a
// ProtocolError, since the server broke the row-length contract.
class VocabMismatchError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class RemoteProvider final : public TokenDistributionProvider {
 public:
  explicit RemoteProvider(const std::string& endpoint) : endpoint_(endpoint) {
    client_ = std::make_unique<httplib::Client>(endpoint);
    if (!client_->is_valid()) throw ConnectionError("invalid endpoint: " + endpoint);
    client_->set_connection_timeout(5, 0);
    client_->set_read_timeout(60, 0);
    handshake();
  }

  const Vocabulary& vocabulary() const override { return vocab_; }
  const std::string& model_name() const { return model_name_; }
  const std::string& endpoint() const { return endpoint_; }
  std::string name() const override { return "remote:" + model_name_; }

  LogitRow next_logits(std::span<const TokenId> history) const override {
    TokenSeq h(history.begin(), history.end());
    return request(std::span<const TokenSeq>(&h, 1)).front();
  }

  std::vector<LogitRow> next_logits_batch(std::span<const TokenSeq> histories) const override {
    std::vector<LogitRow> rows;
    rows.reserve(histories.size());
    for (std::size_t at = 0; at < histories.size(); at += kMaxWireBatch) {
      const std::size_t n = std::min(kMaxWireBatch, histories.size() - at);
      auto part = request(histories.subspan(at, n));
      for (auto& r : part) rows.push_back(std::move(r));
    }
    return rows;
  }

 private:
  void handshake() {
    std::lock_guard lock(mu_);
    auto res = client_->Get("/v1/meta");
    if (!res) {
      throw ConnectionError("cannot reach " + endpoint_ + ": " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw ProtocolError("/v1/meta returned HTTP " + std::to_string(res->status));
    }
    nlohmann::json meta;
    try {
      meta = nlohmann::json::parse(res->body);
      const int protocol = meta.at("protocol").get<int>();
      if (protocol != kWireProtocolVersion) {
        throw ProtocolVersionError("server speaks protocol " + std::to_string(protocol) +
                                   ", client expects " + std::to_string(kWireProtocolVersion));
      }
      vocab_.size = meta.at("vocab_size").get<std::size_t>();
      const auto& eos = meta.at("eos_id");
      if (!eos.is_null()) vocab_.eos = eos.get<TokenId>();
      model_name_ = meta.value("model_name", std::string("unknown"));
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(std::string("malformed /v1/meta: ") + e.what());
    }
    try {
      vocab_.validate();
    } catch (const InvalidInput& e) {
      throw ProtocolError(std::string("bad handshake: ") + e.what());
    }
  }

  std::vector<LogitRow> request(std::span<const TokenSeq> histories) const {
    nlohmann::json body;
    body["histories"] = nlohmann::json::array();
    for (const auto& h : histories) body["histories"].push_back(h);
    httplib::Result res;
    {
      std::lock_guard lock(mu_);
      res = client_->Post("/v1/logits", body.dump(), "application/json");
    }
    if (!res) {
      throw ConnectionError("POST /v1/logits failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw ProtocolError("/v1/logits returned HTTP " + std::to_string(res->status));
    }
    std::vector<LogitRow> rows;
    try {
      const auto reply = nlohmann::json::parse(res->body);
      const auto& logits = reply.at("logits");
      if (!logits.is_array() || logits.size() != histories.size()) {
        throw ProtocolError("expected " + std::to_string(histories.size()) + " rows");
      }
      for (const auto& r : logits) {
        if (!r.is_array()) throw ProtocolError("logit row is not an array");
        if (r.size() != vocab_.size) {
          throw VocabMismatchError("row has " + std::to_string(r.size()) +
                                   " values, vocabulary has " + std::to_string(vocab_.size));
        }
        LogitRow row;
        row.reserve(r.size());
        for (const auto& v : r) {
          const double x = v.get<double>();
          if (!std::isfinite(x)) throw ProtocolError("non-finite logit on the wire");
          row.push_back(x);
        }
        rows.push_back(std::move(row));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(std::string("malformed /v1/logits reply: ") + e.what());
    }
    return rows;
  }

  std::string endpoint_;
  std::unique_ptr<httplib::Client> client_;
  mutable std::mutex mu_;
  Vocabulary vocab_;
  std::string model_name_;
};

inline std::unique_ptr<RemoteProvider> remote_provider_connect(const std::string& endpoint) {
  return std::make_unique<RemoteProvider>(endpoint);
}

}  // namespace xaudit
