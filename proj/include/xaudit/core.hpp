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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace xaudit {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;

// Bad arguments supplied by a caller (out-of-range parameters, length
// mismatches, non-finite logits).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Internal protocol misuse, e.g. streaming a viability oracle past depth T.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Any failure while obtaining logits from a provider. The search annotates
// the decoding depth before rethrowing.
class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;

  void set_depth(std::size_t depth) { depth_ = depth; }
  std::optional<std::size_t> depth() const { return depth_; }

 private:
  std::optional<std::size_t> depth_;
};

// Exhaustive enumeration refused because the tree is larger than the guard.
class GuardRefused : public std::runtime_error {
 public:
  GuardRefused(const std::string& what, double estimated_size)
      : std::runtime_error(what), estimated_size_(estimated_size) {}
  double estimated_size() const { return estimated_size_; }

 private:
  double estimated_size_;
};

// Neumaier-compensated running sum. Bank, prune and coverage ledgers collect
// many tiny addends and the frontier identity is checked at 1e-9.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Log-space probability with an explicit zero. The zero state is a flag, not
// a particular double, and multiplication by zero is absorbing.
class LogProb {
 public:
  constexpr LogProb() = default;

  static constexpr LogProb zero() {
    LogProb p;
    p.zero_ = true;
    return p;
  }
  static LogProb from_log(double log_value) {
    if (std::isnan(log_value) || log_value == std::numeric_limits<double>::infinity()) {
      throw InvalidInput("LogProb: log value must be finite or -inf");
    }
    if (log_value == -std::numeric_limits<double>::infinity()) return zero();
    LogProb p;
    p.log_ = log_value;
    return p;
  }

  bool is_zero() const { return zero_; }
  double log() const { return zero_ ? -std::numeric_limits<double>::infinity() : log_; }
  double prob() const { return zero_ ? 0.0 : std::exp(log_); }

  LogProb& operator*=(LogProb other) {
    if (zero_ || other.zero_) {
      *this = zero();
    } else {
      log_ += other.log_;
    }
    return *this;
  }
  friend LogProb operator*(LogProb a, LogProb b) { return a *= b; }
  friend bool operator==(const LogProb& a, const LogProb& b) {
    return a.zero_ == b.zero_ && (a.zero_ || a.log_ == b.log_);
  }

 private:
  double log_ = 0.0;
  bool zero_ = false;
};

}  // namespace xaudit
