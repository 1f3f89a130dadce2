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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dropmatch {

using TokenId = std::uint32_t;

// Probabilities below this are floored before they appear as a divisor
// inside a logarithm.
inline constexpr double kProbFloor = 1e-12;

// Default normalization tolerance for ProbDist.
inline constexpr double kNormTolerance = 1e-9;

/// Unnormalized scores over a vocabulary. Always finite.
class LogitVector {
 public:
  LogitVector() = default;
  /// Throws kInvalidInput if any entry is NaN or infinite.
  explicit LogitVector(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vec() const noexcept { return values_; }

  friend bool operator==(const LogitVector&, const LogitVector&) = default;

 private:
  struct Trusted {};
  LogitVector(Trusted, std::vector<double> values) : values_(std::move(values)) {}
  friend LogitVector make_trusted_logits(std::vector<double> values);

  std::vector<double> values_;
};

/// Probability vector over a vocabulary: entries >= 0 summing to one.
class ProbDist {
 public:
  ProbDist() = default;

  /// Validates non-negativity and |sum - 1| <= tolerance; throws kInvalidInput
  /// otherwise. The values are stored as given (no renormalization).
  static ProbDist validated(std::vector<double> probs,
                            double tolerance = kNormTolerance);
  static ProbDist uniform(std::size_t vocab_size);
  static ProbDist one_hot(std::size_t vocab_size, TokenId token);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const noexcept { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }
  const std::vector<double>& vec() const noexcept { return probs_; }

  friend bool operator==(const ProbDist&, const ProbDist&) = default;

 private:
  explicit ProbDist(std::vector<double> probs) : probs_(std::move(probs)) {}
  friend ProbDist make_trusted_dist(std::vector<double> probs);

  std::vector<double> probs_;
};

// Skip validation; only for values produced by the routines below.
LogitVector make_trusted_logits(std::vector<double> values);
ProbDist make_trusted_dist(std::vector<double> probs);

/// Neumaier-compensated sum.
double stable_sum(std::span<const double> xs) noexcept;

/// Index of the first maximal entry.
TokenId argmax(std::span<const double> xs);

/// Max-subtracted softmax. Requires at least two finite logits.
ProbDist softmax(const LogitVector& logits);

/// Writes softmax(logits) into out without allocating. Sizes must match.
void softmax_into(std::span<const double> logits, std::span<double> out);

/// KL(p || q) in nats; p_i = 0 terms contribute 0, q_i floored at kProbFloor.
double kl_divergence(const ProbDist& p, const ProbDist& q);
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// Jensen-Shannon divergence in nats, symmetric, bounded by ln 2.
double js_divergence(const ProbDist& p, const ProbDist& q);
double js_divergence(std::span<const double> p, std::span<const double> q);

/// Elementwise mean of K >= 1 logit vectors of equal length.
LogitVector mean_logits(std::span<const LogitVector> logit_set);

}  // namespace dropmatch
