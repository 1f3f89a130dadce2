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

#include "dropmatch/core_math.hpp"
#include "dropmatch/kernels.hpp"
#include "dropmatch/rng.hpp"

namespace dropmatch {

/// Final-layer representation fed to the LM head. Always finite.
class HiddenState {
 public:
  HiddenState() = default;
  explicit HiddenState(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const HiddenState&, const HiddenState&) = default;

 private:
  std::vector<double> values_;
};

struct DropoutMask {
  std::vector<std::uint8_t> bits;
  double keep_prob = 1.0;
};

/// LM head projection, shape V x d.
class HeadWeights {
 public:
  HeadWeights() = default;
  /// Throws kInvalidInput on non-finite entries or an empty shape.
  explicit HeadWeights(DenseMatrix matrix);

  std::size_t vocab_size() const noexcept { return matrix_.rows(); }
  std::size_t hidden_dim() const noexcept { return matrix_.cols(); }
  const DenseMatrix& matrix() const noexcept { return matrix_; }

  friend bool operator==(const HeadWeights&, const HeadWeights&) = default;

 private:
  DenseMatrix matrix_;
};

/// The K dropout paths through the head for one position, plus the
/// no-dropout reference distribution.
struct HeadSampleSet {
  std::vector<LogitVector> logits;
  std::vector<ProbDist> dists;
  std::vector<TokenId> argmax_tokens;
  LogitVector deterministic_logits;
  ProbDist deterministic_dist;
  double p_drop = 0.0;

  std::size_t heads() const noexcept { return logits.size(); }
};

/// Throws kInvalidConfig unless 0 <= p_drop < 1.
void validate_p_drop(double p_drop);

DropoutMask sample_mask(std::size_t hidden_dim, double p_drop, CounterStream& stream);

/// (h * m) / (1 - p_drop); dropped coordinates become exact zeros.
HiddenState apply_dropout(const HiddenState& h, const DropoutMask& mask, double p_drop);

LogitVector head_forward(const HeadWeights& weights, const HiddenState& h,
                         ExecPolicy policy = ExecPolicy::kSerial);

/// Stream keys for the K heads at one verification position.
std::vector<StreamKey> head_stream_keys(std::uint64_t seed, std::uint64_t position,
                                        std::size_t heads);

/// Head i draws its mask from streams[i]; K = streams.size().
/// Under kParallel the heads are spread across threads; output is identical
/// to kSerial.
HeadSampleSet mc_head_sample(const HeadWeights& weights, const HiddenState& h,
                             std::span<const StreamKey> streams, double p_drop,
                             ExecPolicy policy = ExecPolicy::kSerial);

}  // namespace dropmatch
