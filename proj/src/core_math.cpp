// Copyright 2026 The DropMatch Authors. All Rights Reserved.
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

#include "dropmatch/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dropmatch/error.hpp"

namespace dropmatch {

namespace {

// Running Neumaier sum.
struct Compensated {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) noexcept {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      carry += (sum - t) + x;
    } else {
      carry += (x - t) + sum;
    }
    sum = t;
  }
  double value() const noexcept { return sum + carry; }
};

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    fail(ErrorKind::kInvalidInput,
         std::string(what) + ": length mismatch (" + std::to_string(a) +
             " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid input";
    case ErrorKind::kInvalidConfig: return "invalid config";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kIo: return "I/O error";
  }
  return "error";
}

LogitVector::LogitVector(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      fail(ErrorKind::kInvalidInput,
           "logit " + std::to_string(i) + " is not finite");
    }
  }
}

LogitVector make_trusted_logits(std::vector<double> values) {
  return LogitVector(LogitVector::Trusted{}, std::move(values));
}

ProbDist make_trusted_dist(std::vector<double> probs) {
  return ProbDist(std::move(probs));
}

ProbDist ProbDist::validated(std::vector<double> probs, double tolerance) {
  if (probs.empty()) {
    fail(ErrorKind::kInvalidInput, "probability vector is empty");
  }
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!std::isfinite(probs[i]) || probs[i] < 0.0) {
      fail(ErrorKind::kInvalidInput,
           "probability " + std::to_string(i) + " is negative or not finite");
    }
  }
  const double total = stable_sum(probs);
  if (std::abs(total - 1.0) > tolerance) {
    fail(ErrorKind::kInvalidInput,
         "probabilities sum to " + std::to_string(total) + ", not 1");
  }
  return ProbDist(std::move(probs));
}

ProbDist ProbDist::uniform(std::size_t vocab_size) {
  if (vocab_size == 0) fail(ErrorKind::kInvalidInput, "empty vocabulary");
  return ProbDist(std::vector<double>(vocab_size, 1.0 / static_cast<double>(vocab_size)));
}

ProbDist ProbDist::one_hot(std::size_t vocab_size, TokenId token) {
  if (token >= vocab_size) {
    fail(ErrorKind::kInvalidInput, "token id out of vocabulary");
  }
  std::vector<double> probs(vocab_size, 0.0);
  probs[token] = 1.0;
  return ProbDist(std::move(probs));
}

double stable_sum(std::span<const double> xs) noexcept {
  Compensated acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

TokenId argmax(std::span<const double> xs) {
  if (xs.empty()) fail(ErrorKind::kInvalidInput, "argmax of empty vector");
  return static_cast<TokenId>(std::max_element(xs.begin(), xs.end()) - xs.begin());
}

void softmax_into(std::span<const double> logits, std::span<double> out) {
  require_same_length(logits.size(), out.size(), "softmax");
  if (logits.size() < 2) {
    fail(ErrorKind::kInvalidInput, "softmax needs at least two logits");
  }
  double top = logits[0];
  for (double l : logits) {
    if (!std::isfinite(l)) fail(ErrorKind::kInvalidInput, "softmax of non-finite logit");
    top = std::max(top, l);
  }
  Compensated total;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    total.add(out[i]);
  }
  const double inv = 1.0 / total.value();
  for (double& p : out) p *= inv;
}

ProbDist softmax(const LogitVector& logits) {
  std::vector<double> out(logits.size());
  softmax_into(logits.values(), out);
  return make_trusted_dist(std::move(out));
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  require_same_length(p.size(), q.size(), "kl_divergence");
  Compensated acc;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    acc.add(p[i] * std::log(p[i] / std::max(q[i], kProbFloor)));
  }
  return std::max(0.0, acc.value());
}

double kl_divergence(const ProbDist& p, const ProbDist& q) {
  return kl_divergence(p.probs(), q.probs());
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
  require_same_length(p.size(), q.size(), "js_divergence");
  // Single pass over both halves; the mixture is never materialized.
  Compensated acc;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = std::max(0.5 * (p[i] + q[i]), kProbFloor);
    if (p[i] > 0.0) acc.add(p[i] * std::log(p[i] / m));
    if (q[i] > 0.0) acc.add(q[i] * std::log(q[i] / m));
  }
  return std::clamp(0.5 * acc.value(), 0.0, std::numbers::ln2);
}

double js_divergence(const ProbDist& p, const ProbDist& q) {
  return js_divergence(p.probs(), q.probs());
}

LogitVector mean_logits(std::span<const LogitVector> logit_set) {
  if (logit_set.empty()) fail(ErrorKind::kInvalidInput, "mean of an empty logit set");
  const std::size_t v = logit_set.front().size();
  std::vector<double> mean(v, 0.0);
  for (const auto& l : logit_set) {
    require_same_length(l.size(), v, "mean_logits");
    for (std::size_t j = 0; j < v; ++j) mean[j] += l[j];
  }
  const double inv_k = 1.0 / static_cast<double>(logit_set.size());
  for (double& x : mean) x *= inv_k;
  return make_trusted_logits(std::move(mean));
}

}  // namespace dropmatch
