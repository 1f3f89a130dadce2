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

#include "dropmatch/acceptance.hpp"

#include <algorithm>
#include <map>
#include <vector>

#include "dropmatch/error.hpp"

namespace dropmatch {

std::string_view to_string(Criterion c) noexcept {
  switch (c) {
    case Criterion::kLossless: return "lossless";
    case Criterion::kGreedyMatch: return "greedy_match";
    case Criterion::kNaive: return "naive";
    case Criterion::kDropMatchJs: return "dropmatch_js";
  }
  return "?";
}

std::string_view to_string(AcceptBranch b) noexcept {
  switch (b) {
    case AcceptBranch::kJsPass: return "js_pass";
    case AcceptBranch::kMajorityPass: return "majority_pass";
    case AcceptBranch::kNaivePass: return "naive_pass";
    case AcceptBranch::kLosslessPass: return "lossless_pass";
    case AcceptBranch::kRejected: return "rejected";
  }
  return "?";
}

std::optional<Criterion> parse_criterion(std::string_view s) noexcept {
  for (auto c : {Criterion::kLossless, Criterion::kGreedyMatch, Criterion::kNaive,
                 Criterion::kDropMatchJs}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

Plurality plurality(std::span<const TokenId> tokens) {
  if (tokens.empty()) fail(ErrorKind::kInvalidInput, "plurality of an empty token list");
  std::map<TokenId, std::size_t> counts;
  for (TokenId t : tokens) ++counts[t];
  Plurality best;
  for (const auto& [token, count] : counts) {
    if (count > best.count) {
      best = Plurality{token, count, true};
    } else if (count == best.count) {
      best.unique = false;
    }
  }
  return best;
}

std::optional<TokenId> majority_token(std::span<const TokenId> tokens, MajorityRule rule) {
  const Plurality p = plurality(tokens);
  if (rule == MajorityRule::kStrict) {
    if (2 * p.count > tokens.size()) return p.token;
    return std::nullopt;
  }
  if (p.unique) return p.token;
  return std::nullopt;
}

ProbDist centroid(const HeadSampleSet& samples) {
  return softmax(mean_logits(samples.logits));
}

AcceptanceDecision naive_match(const DraftToken& draft, const HeadSampleSet& samples) {
  const auto& tokens = samples.argmax_tokens;
  const bool hit = std::find(tokens.begin(), tokens.end(), draft.token_id) != tokens.end();
  AcceptanceDecision d;
  d.accepted = hit;
  d.branch = hit ? AcceptBranch::kNaivePass : AcceptBranch::kRejected;
  return d;
}

JsComparison js_compare(const DraftToken& draft, const HeadSampleSet& samples,
                        const ProbDist& center) {
  JsComparison cmp;
  cmp.draft_to_centroid = js_divergence(draft.dist, center);
  double total = 0.0;
  for (const auto& head : samples.dists) {
    const double js = js_divergence(head, center);
    cmp.max_head_to_centroid = std::max(cmp.max_head_to_centroid, js);
    total += js;
  }
  if (!samples.dists.empty()) {
    cmp.mean_head_to_centroid = total / static_cast<double>(samples.dists.size());
  }
  return cmp;
}

bool js_criterion(const DraftToken& draft, const HeadSampleSet& samples, const ProbDist& center) {
  return js_compare(draft, samples, center).passes();
}

bool majority_criterion(const DraftToken& draft, const HeadSampleSet& samples, MajorityRule rule) {
  const auto token = majority_token(samples.argmax_tokens, rule);
  return token.has_value() && *token == draft.token_id;
}

AcceptanceDecision dropmatch_accept(const DraftToken& draft, const HeadSampleSet& samples,
                                    MajorityRule rule) {
  return dropmatch_accept(draft, samples, centroid(samples), rule);
}

AcceptanceDecision dropmatch_accept(const DraftToken& draft, const HeadSampleSet& samples,
                                    const ProbDist& center, MajorityRule rule) {
  const JsComparison cmp = js_compare(draft, samples, center);

  AcceptanceDecision d;
  d.js_draft_to_centroid = cmp.draft_to_centroid;
  d.max_js_head_to_centroid = cmp.max_head_to_centroid;
  d.mean_js_head_to_centroid = cmp.mean_head_to_centroid;
  if (cmp.passes()) {
    d.accepted = true;
    d.branch = AcceptBranch::kJsPass;
    return d;
  }
  d.majority_consulted = true;
  if (majority_criterion(draft, samples, rule)) {
    d.accepted = true;
    d.branch = AcceptBranch::kMajorityPass;
  }
  return d;
}

AcceptanceDecision greedy_match(const DraftToken& draft, const ProbDist& target_dist) {
  AcceptanceDecision d;
  d.accepted = argmax(target_dist.probs()) == draft.token_id;
  d.branch = d.accepted ? AcceptBranch::kLosslessPass : AcceptBranch::kRejected;
  return d;
}

TokenId sample_from(std::span<const double> weights, CounterStream& stream) {
  const double total = stable_sum(weights);
  if (!(total > 0.0)) fail(ErrorKind::kInvalidInput, "cannot sample from zero weights");
  const double target = stream.uniform() * total;
  double running = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    running += weights[i];
    last_positive = i;
    if (target < running) return static_cast<TokenId>(i);
  }
  // Rounding can leave target just above the running total.
  return static_cast<TokenId>(last_positive);
}

LosslessOutcome lossless_accept(const DraftToken& draft, const ProbDist& target_dist,
                                CounterStream& stream, DecodeMode mode) {
  if (draft.dist.size() != target_dist.size() || draft.token_id >= target_dist.size()) {
    fail(ErrorKind::kInvalidInput, "draft and target distributions disagree in size");
  }
  if (mode == DecodeMode::kGreedy) {
    const TokenId best = argmax(target_dist.probs());
    if (best == draft.token_id) return {true, std::nullopt};
    return {false, best};
  }

  const double p_target = target_dist[draft.token_id];
  const double p_draft = draft.dist[draft.token_id];
  const bool accept = p_draft <= 0.0 ? p_target > 0.0 : stream.uniform() * p_draft < p_target;
  if (accept) return {true, std::nullopt};

  std::vector<double> residual(target_dist.size());
  for (std::size_t i = 0; i < residual.size(); ++i) {
    residual[i] = std::max(0.0, target_dist[i] - draft.dist[i]);
  }
  if (!(stable_sum(residual) > 0.0)) return {false, sample_from(target_dist.probs(), stream)};
  return {false, sample_from(residual, stream)};
}

}  // namespace dropmatch
