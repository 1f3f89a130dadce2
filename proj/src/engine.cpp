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

#include "dropmatch/engine.hpp"

#include <algorithm>
#include <chrono>
#include <string>

#include "dropmatch/error.hpp"
#include "dropmatch/rng.hpp"

namespace dropmatch {

namespace {

using Clock = std::chrono::steady_clock;

// Accumulates elapsed time into a counter when enabled.
class ScopedTimer {
 public:
  ScopedTimer(bool enabled, std::int64_t& sink) : enabled_(enabled), sink_(sink) {
    if (enabled_) start_ = Clock::now();
  }
  ~ScopedTimer() {
    if (enabled_) {
      sink_ += std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start_).count();
    }
  }
  ScopedTimer(const ScopedTimer&) = delete;
  ScopedTimer& operator=(const ScopedTimer&) = delete;

 private:
  bool enabled_;
  std::int64_t& sink_;
  Clock::time_point start_;
};

void config_error(const std::string& field, const std::string& why) {
  fail(ErrorKind::kInvalidConfig, field + ": " + why);
}

// The target's next-token distribution with the head applied explicitly so
// that the head portion can be timed separately.
ProbDist target_dist(const LanguageModel& target, std::span<const TokenId> context,
                     ExecPolicy exec, bool timing, std::int64_t& head_ns,
                     std::optional<HiddenState>* hidden_out = nullptr) {
  if (const HeadWeights* head = target.head_weights(); head != nullptr) {
    HiddenState h = target.hidden(context);
    ProbDist dist;
    {
      ScopedTimer t(timing, head_ns);
      dist = softmax(head_forward(*head, h, exec));
    }
    if (hidden_out != nullptr) *hidden_out = std::move(h);
    return dist;
  }
  return target.next_dist(context);
}

}  // namespace

void EngineConfig::validate() const {
  if (draft_length < 1) config_error("L", "draft length must be >= 1");
  if (heads < 1) config_error("K", "head count must be >= 1");
  if (!(p_drop >= 0.0 && p_drop < 1.0)) {
    config_error("p_drop", "must lie in [0, 1), got " + std::to_string(p_drop));
  }
  if (max_tokens < 1) config_error("max_tokens", "must be >= 1");
}

std::size_t StepRecord::evaluated() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(decisions.begin(), decisions.end(), [](const auto& d) { return d.has_value(); }));
}

std::uint64_t stream_seed(std::uint64_t global_seed, std::uint64_t stream_index) noexcept {
  if (stream_index == 0) return global_seed;
  return mix64(global_seed ^ mix64(stream_index + 0x51af3d2e7c9b0a11ULL));
}

std::vector<DraftToken> draft_propose(const LanguageModel& draft, std::span<const TokenId> context,
                                      std::size_t length, DecodeMode mode, std::uint64_t seed,
                                      std::uint64_t step) {
  if (length < 1) fail(ErrorKind::kInvalidInput, "draft length must be >= 1");
  std::vector<TokenId> ctx(context.begin(), context.end());
  std::vector<DraftToken> out;
  out.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    ProbDist dist = draft.next_dist(ctx);
    TokenId token;
    if (mode == DecodeMode::kGreedy) {
      token = argmax(dist.probs());
    } else {
      CounterStream stream(seed, StreamDomain::kDraftSample, step, i);
      token = sample_from(dist.probs(), stream);
    }
    ctx.push_back(token);
    out.push_back(DraftToken{token, std::move(dist)});
  }
  return out;
}

StepRecord verify_step(const LanguageModel& target, std::span<const TokenId> context,
                       std::span<const DraftToken> proposal, const EngineConfig& config,
                       StepCursor cursor, TraceSink* trace) {
  if (proposal.empty()) fail(ErrorKind::kInvalidInput, "empty proposal");
  const bool timing = config.record_timing;
  const HeadWeights* head = target.head_weights();
  if (config.samples_heads() && (head == nullptr || !target.capabilities().has_hidden_state)) {
    config_error("criterion", std::string(to_string(config.criterion)) +
                                  " needs a target with a hidden state");
  }

  StepRecord rec;
  rec.step_index = cursor.step;
  rec.first_position = cursor.position;
  rec.proposed.assign(proposal.begin(), proposal.end());
  rec.decisions.assign(proposal.size(), std::nullopt);

  const auto start = Clock::now();
  std::vector<TokenId> ctx(context.begin(), context.end());
  std::optional<TokenId> replacement;

  for (std::size_t t = 0; t < proposal.size(); ++t) {
    const DraftToken& draft = proposal[t];
    const std::uint64_t position = cursor.position + t;
    AcceptanceDecision decision;

    if (config.samples_heads()) {
      const HiddenState h = target.hidden(ctx);
      HeadSampleSet samples;
      std::optional<ProbDist> center;
      {
        ScopedTimer timer(timing, rec.wall_time_head_ns);
        const auto keys = head_stream_keys(config.seed, position, config.heads);
        samples = mc_head_sample(*head, h, keys, config.p_drop, config.exec);
        if (config.criterion == Criterion::kNaive) {
          decision = naive_match(draft, samples);
        } else {
          center = centroid(samples);
          decision = dropmatch_accept(draft, samples, *center, config.majority_rule);
        }
      }
      const Plurality pl = plurality(samples.argmax_tokens);
      rec.head_stats.push_back(
          PositionStats{pl.count, pl.token, samples.deterministic_dist[pl.token]});
      if (!decision.accepted) {
        if (config.rejection_replacement == ReplacementPolicy::kCentroidArgmax) {
          if (!center) center = centroid(samples);
          replacement = argmax(center->probs());
        } else {
          replacement = argmax(samples.deterministic_dist.probs());
        }
      }
      if (trace != nullptr) trace->push_back(TraceRecord{position, h, draft.dist, draft.token_id});
    } else {
      std::optional<HiddenState> h;
      const ProbDist dist = target_dist(target, ctx, config.exec, timing, rec.wall_time_head_ns,
                                        trace != nullptr ? &h : nullptr);
      ScopedTimer timer(timing, rec.wall_time_head_ns);
      if (config.criterion == Criterion::kGreedyMatch) {
        decision = greedy_match(draft, dist);
        if (!decision.accepted) replacement = argmax(dist.probs());
      } else {
        CounterStream stream(config.seed, StreamDomain::kLossless, position);
        const LosslessOutcome out = lossless_accept(draft, dist, stream, config.mode);
        decision.accepted = out.accepted;
        decision.branch = out.accepted ? AcceptBranch::kLosslessPass : AcceptBranch::kRejected;
        replacement = out.replacement;
      }
      if (trace != nullptr && h) {
        trace->push_back(TraceRecord{position, *h, draft.dist, draft.token_id});
      }
    }

    rec.decisions[t] = decision;
    if (!decision.accepted) break;
    ++rec.accepted_count;
    ctx.push_back(draft.token_id);
  }

  if (replacement) {
    rec.bonus_token = *replacement;
  } else {
    const ProbDist next = target_dist(target, ctx, config.exec, timing, rec.wall_time_head_ns);
    if (config.mode == DecodeMode::kGreedy) {
      rec.bonus_token = argmax(next.probs());
    } else {
      CounterStream stream(config.seed, StreamDomain::kBonus, cursor.step);
      rec.bonus_token = sample_from(next.probs(), stream);
    }
  }

  if (timing) {
    rec.wall_time_total_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
  }
  return rec;
}

DecodeResult decode(const LanguageModel& draft, const LanguageModel& target,
                    std::span<const TokenId> prompt, const EngineConfig& config,
                    TraceSink* trace) {
  config.validate();
  if (prompt.empty()) fail(ErrorKind::kInvalidInput, "prompt must not be empty");
  if (draft.vocab_size() != target.vocab_size()) {
    fail(ErrorKind::kInvalidConfig, "draft and target vocabularies differ");
  }
  if (target.capabilities().is_replay || draft.capabilities().is_replay) {
    fail(ErrorKind::kInvalidConfig, "trace replay models cannot drive a live decode");
  }

  DecodeResult result;
  std::vector<TokenId> context(prompt.begin(), prompt.end());
  StepCursor cursor;
  const auto start = Clock::now();

  while (result.tokens.size() < config.max_tokens) {
    std::int64_t draft_ns = 0;
    std::vector<DraftToken> proposal;
    {
      ScopedTimer timer(config.record_timing, draft_ns);
      proposal = draft_propose(draft, context, config.draft_length, config.mode, config.seed,
                               cursor.step);
    }
    StepRecord rec = verify_step(target, context, proposal, config, cursor, trace);
    rec.wall_time_total_ns += draft_ns;
    cursor.position += rec.evaluated();
    ++cursor.step;

    std::vector<TokenId> emitted;
    for (std::size_t i = 0; i < rec.accepted_count; ++i) emitted.push_back(proposal[i].token_id);
    emitted.push_back(rec.bonus_token);

    bool finished = false;
    for (TokenId tok : emitted) {
      if (result.tokens.size() >= config.max_tokens) break;
      result.tokens.push_back(tok);
      context.push_back(tok);
      ++rec.tokens_emitted;
      if (config.eos_token && tok == *config.eos_token) {
        finished = true;
        break;
      }
    }
    result.steps.push_back(std::move(rec));
    if (finished) break;
  }

  if (config.record_timing) {
    result.wall_time_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
  }
  return result;
}

std::vector<TokenId> greedy_decode(const LanguageModel& model, std::span<const TokenId> prompt,
                                   std::size_t max_tokens, std::optional<TokenId> eos_token) {
  std::vector<TokenId> context(prompt.begin(), prompt.end());
  std::vector<TokenId> out;
  while (out.size() < max_tokens) {
    const TokenId tok = argmax(model.next_dist(context).probs());
    out.push_back(tok);
    context.push_back(tok);
    if (eos_token && tok == *eos_token) break;
  }
  return out;
}

}  // namespace dropmatch
