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
#include <optional>
#include <span>
#include <string_view>

#include "dropmatch/core_math.hpp"
#include "dropmatch/mc_head.hpp"
#include "dropmatch/rng.hpp"

namespace dropmatch {

enum class Criterion { kLossless, kGreedyMatch, kNaive, kDropMatchJs };
enum class AcceptBranch { kJsPass, kMajorityPass, kNaivePass, kLosslessPass, kRejected };
enum class DecodeMode { kGreedy, kSampled };

/// kPlurality: the token with the unique largest count (ties fail).
/// kStrict: a token held by more than K/2 heads.
enum class MajorityRule { kPlurality, kStrict };

std::string_view to_string(Criterion c) noexcept;
std::string_view to_string(AcceptBranch b) noexcept;
std::optional<Criterion> parse_criterion(std::string_view s) noexcept;

/// A proposed token with the draft model's full distribution at that position.
struct DraftToken {
  TokenId token_id = 0;
  ProbDist dist;
};

struct AcceptanceDecision {
  bool accepted = false;
  AcceptBranch branch = AcceptBranch::kRejected;
  // Set whenever the JS comparison ran.
  std::optional<double> js_draft_to_centroid;
  std::optional<double> max_js_head_to_centroid;
  std::optional<double> mean_js_head_to_centroid;
  // True only if the majority fallback was evaluated.
  bool majority_consulted = false;
};

struct Plurality {
  TokenId token = 0;   // smallest id among the most frequent
  std::size_t count = 0;
  bool unique = false; // no other token reaches `count`
};

/// Requires a non-empty token list.
Plurality plurality(std::span<const TokenId> tokens);

/// The majority token under `rule`, if one exists.
std::optional<TokenId> majority_token(std::span<const TokenId> tokens, MajorityRule rule);

/// softmax of the mean head logits (not the mean of head probabilities).
ProbDist centroid(const HeadSampleSet& samples);

AcceptanceDecision naive_match(const DraftToken& draft, const HeadSampleSet& samples);

struct JsComparison {
  double draft_to_centroid = 0.0;
  double max_head_to_centroid = 0.0;
  double mean_head_to_centroid = 0.0;
  bool passes() const noexcept { return draft_to_centroid <= max_head_to_centroid; }
};

JsComparison js_compare(const DraftToken& draft, const HeadSampleSet& samples,
                        const ProbDist& center);

/// JS(draft, c) <= max_i JS(head_i, c); the boundary accepts.
bool js_criterion(const DraftToken& draft, const HeadSampleSet& samples, const ProbDist& center);

bool majority_criterion(const DraftToken& draft, const HeadSampleSet& samples,
                        MajorityRule rule = MajorityRule::kPlurality);

/// JS test first, majority fallback second, otherwise reject.
AcceptanceDecision dropmatch_accept(const DraftToken& draft, const HeadSampleSet& samples,
                                    MajorityRule rule = MajorityRule::kPlurality);
/// Same, with a centroid the caller already computed.
AcceptanceDecision dropmatch_accept(const DraftToken& draft, const HeadSampleSet& samples,
                                    const ProbDist& center, MajorityRule rule);

/// Accept iff the draft token is the target argmax.
AcceptanceDecision greedy_match(const DraftToken& draft, const ProbDist& target_dist);

struct LosslessOutcome {
  bool accepted = false;
  std::optional<TokenId> replacement;
};

/// Standard speculative rejection sampling. In greedy mode this is exact
/// argmax matching and consumes no randomness.
LosslessOutcome lossless_accept(const DraftToken& draft, const ProbDist& target_dist,
                                CounterStream& stream, DecodeMode mode = DecodeMode::kSampled);

/// Inverse-CDF draw from non-negative weights (need not be normalized).
TokenId sample_from(std::span<const double> weights, CounterStream& stream);

}  // namespace dropmatch
