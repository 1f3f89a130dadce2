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
#include <optional>
#include <span>
#include <vector>

#include "dropmatch/acceptance.hpp"
#include "dropmatch/kernels.hpp"
#include "dropmatch/models.hpp"

namespace dropmatch {

/// Token emitted in place of a draft token rejected by the naive or
/// DropMatch criteria.
enum class ReplacementPolicy { kDeterministicArgmax, kCentroidArgmax };

struct EngineConfig {
  Criterion criterion = Criterion::kDropMatchJs;
  std::size_t draft_length = 5;  // L
  std::size_t heads = 5;         // K
  double p_drop = 0.3;
  std::uint64_t seed = 0;
  std::size_t max_tokens = 64;
  DecodeMode mode = DecodeMode::kGreedy;
  ReplacementPolicy rejection_replacement = ReplacementPolicy::kDeterministicArgmax;
  MajorityRule majority_rule = MajorityRule::kPlurality;
  std::optional<TokenId> eos_token;
  bool record_timing = true;
  ExecPolicy exec = ExecPolicy::kSerial;

  /// Throws kInvalidConfig naming the offending field.
  void validate() const;
  bool samples_heads() const noexcept {
    return criterion == Criterion::kDropMatchJs || criterion == Criterion::kNaive;
  }
};

/// Head-agreement summary for a position where the K heads were sampled.
struct PositionStats {
  std::size_t plurality_size = 0;
  TokenId plurality_token = 0;
  double plurality_prob = 0.0;  // under the no-dropout distribution
};

struct StepRecord {
  std::uint64_t step_index = 0;
  std::uint64_t first_position = 0;  // global index of the first verified position
  std::vector<DraftToken> proposed;
  std::size_t accepted_count = 0;
  TokenId bonus_token = 0;
  // One slot per proposed token; empty after the first rejection.
  std::vector<std::optional<AcceptanceDecision>> decisions;
  std::vector<PositionStats> head_stats;  // one per evaluated position, if heads were sampled
  std::size_t tokens_emitted = 0;         // after max_tokens / end-token truncation
  std::int64_t wall_time_total_ns = 0;
  std::int64_t wall_time_head_ns = 0;

  std::size_t evaluated() const noexcept;
};

/// Where verify_step is within a decode; keys the random streams.
struct StepCursor {
  std::uint64_t step = 0;
  std::uint64_t position = 0;
};

/// Receives (position, hidden state, draft token) for every verified
/// position of a hidden-state target.
using TraceSink = std::vector<TraceRecord>;

std::vector<DraftToken> draft_propose(const LanguageModel& draft, std::span<const TokenId> context,
                                      std::size_t length, DecodeMode mode = DecodeMode::kGreedy,
                                      std::uint64_t seed = 0, std::uint64_t step = 0);

StepRecord verify_step(const LanguageModel& target, std::span<const TokenId> context,
                       std::span<const DraftToken> proposal, const EngineConfig& config,
                       StepCursor cursor = {}, TraceSink* trace = nullptr);

struct DecodeResult {
  std::vector<TokenId> tokens;  // emitted tokens only, prompt excluded
  std::vector<StepRecord> steps;
  std::int64_t wall_time_ns = 0;
};

/// Propose/verify until max_tokens are emitted or the end token appears.
DecodeResult decode(const LanguageModel& draft, const LanguageModel& target,
                    std::span<const TokenId> prompt, const EngineConfig& config,
                    TraceSink* trace = nullptr);

/// Plain autoregressive greedy decoding of one model.
std::vector<TokenId> greedy_decode(const LanguageModel& model, std::span<const TokenId> prompt,
                                   std::size_t max_tokens,
                                   std::optional<TokenId> eos_token = std::nullopt);

/// Seed for the i-th independent decode stream of a run; stream 0 keeps the
/// global seed.
std::uint64_t stream_seed(std::uint64_t global_seed, std::uint64_t stream_index) noexcept;

}  // namespace dropmatch
