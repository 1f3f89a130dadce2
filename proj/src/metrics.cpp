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

#include "dropmatch/metrics.hpp"

#include <string>

#include "dropmatch/error.hpp"

namespace dropmatch {

TauPair mean_acceptance_length(std::span<const StepRecord> records) {
  if (records.empty()) fail(ErrorKind::kInvalidInput, "no step records");
  std::uint64_t accepted = 0;
  for (const auto& r : records) accepted += r.accepted_count;
  const double n = static_cast<double>(records.size());
  return TauPair{static_cast<double>(accepted + records.size()) / n,
                 static_cast<double>(accepted) / n};
}

// ---------------------------------------------------------------------------

void AgreementStats::add(std::size_t plurality_size, double plurality_prob) {
  if (plurality_size < 1 || plurality_size > counts_.size()) {
    fail(ErrorKind::kInvalidInput, "plurality size " + std::to_string(plurality_size) +
                                       " outside 1.." + std::to_string(counts_.size()));
  }
  ++counts_[plurality_size - 1];
  prob_sums_[plurality_size - 1] += plurality_prob;
}

void AgreementStats::add(const HeadSampleSet& samples) {
  const Plurality p = plurality(samples.argmax_tokens);
  add(p.count, samples.deterministic_dist[p.token]);
}

void AgreementStats::merge(const AgreementStats& other) {
  if (other.counts_.empty()) return;
  if (counts_.empty()) {
    *this = other;
    return;
  }
  if (other.counts_.size() != counts_.size()) {
    fail(ErrorKind::kInvalidInput, "cannot merge agreement stats with different K");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    counts_[i] += other.counts_[i];
    prob_sums_[i] += other.prob_sums_[i];
  }
}

std::uint64_t AgreementStats::positions() const noexcept {
  std::uint64_t n = 0;
  for (auto c : counts_) n += c;
  return n;
}

std::vector<std::optional<double>> AgreementStats::mean_prob_by_size() const {
  std::vector<std::optional<double>> out(counts_.size());
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (counts_[i] > 0) out[i] = prob_sums_[i] / static_cast<double>(counts_[i]);
  }
  return out;
}

std::optional<double> AgreementStats::unanimity_ratio() const {
  const std::uint64_t n = positions();
  if (n == 0) return std::nullopt;
  return static_cast<double>(counts_.back()) / static_cast<double>(n);
}

AgreementStats agreement_stats(std::span<const HeadSampleSet> positions) {
  if (positions.empty()) return AgreementStats{};
  AgreementStats stats(positions.front().heads());
  for (const auto& s : positions) {
    if (s.heads() != stats.heads()) {
      fail(ErrorKind::kInvalidInput, "agreement_stats: sample sets disagree on K");
    }
    stats.add(s);
  }
  return stats;
}

// ---------------------------------------------------------------------------

std::optional<double> JsPartition::mean_js_centroid_draft() const {
  if (count == 0) return std::nullopt;
  return sum_js_centroid_draft / static_cast<double>(count);
}

std::optional<double> JsPartition::mean_js_centroid_heads() const {
  if (count == 0) return std::nullopt;
  return sum_js_centroid_heads / static_cast<double>(count);
}

void JsStats::add(const AcceptanceDecision& d) {
  if (!d.accepted || !d.js_draft_to_centroid || !d.mean_js_head_to_centroid) return;
  JsPartition* part = nullptr;
  if (d.branch == AcceptBranch::kJsPass) part = &dispersed;
  if (d.branch == AcceptBranch::kMajorityPass) part = &concentrated;
  if (part == nullptr) return;
  ++part->count;
  part->sum_js_centroid_draft += *d.js_draft_to_centroid;
  part->sum_js_centroid_heads += *d.mean_js_head_to_centroid;
}

void JsStats::merge(const JsStats& other) {
  for (auto [mine, theirs] : {std::pair{&dispersed, &other.dispersed},
                              std::pair{&concentrated, &other.concentrated}}) {
    mine->count += theirs->count;
    mine->sum_js_centroid_draft += theirs->sum_js_centroid_draft;
    mine->sum_js_centroid_heads += theirs->sum_js_centroid_heads;
  }
}

JsStats js_stats(std::span<const AcceptanceDecision> decisions) {
  JsStats stats;
  for (const auto& d : decisions) stats.add(d);
  return stats;
}

JsStats js_stats(std::span<const AcceptanceDecision> decisions,
                 std::span<const HeadSampleSet> samples) {
  if (decisions.size() != samples.size()) {
    fail(ErrorKind::kInvalidInput, "js_stats: one sample set per decision required");
  }
  JsStats stats;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const AcceptanceDecision& d = decisions[i];
    if (!d.accepted || !d.js_draft_to_centroid) continue;
    const ProbDist center = centroid(samples[i]);
    double total = 0.0;
    for (const auto& head : samples[i].dists) total += js_divergence(center, head);
    AcceptanceDecision copy = d;
    copy.mean_js_head_to_centroid = total / static_cast<double>(samples[i].heads());
    stats.add(copy);
  }
  return stats;
}

// ---------------------------------------------------------------------------

double head_time_fraction(std::span<const StepRecord> records) {
  std::int64_t head = 0;
  std::int64_t total = 0;
  for (const auto& r : records) {
    head += r.wall_time_head_ns;
    total += r.wall_time_total_ns;
  }
  if (total <= 0) return 0.0;
  return static_cast<double>(head) / static_cast<double>(total);
}

OverheadReport overhead_report(std::span<const StepRecord> dropmatch_records,
                               std::span<const StepRecord> greedy_records) {
  OverheadReport r;
  r.js_fraction = head_time_fraction(dropmatch_records);
  r.greedy_fraction = head_time_fraction(greedy_records);
  r.delta = r.js_fraction - r.greedy_fraction;
  return r;
}

// ---------------------------------------------------------------------------

void RunAccumulator::add_step(const StepRecord& rec) {
  ++steps_;
  accepted_ += rec.accepted_count;
  emitted_ += rec.tokens_emitted;
  evaluated_ += rec.evaluated();
  total_ns_ += rec.wall_time_total_ns;
  head_ns_ += rec.wall_time_head_ns;
  for (const auto& s : rec.head_stats) agreement_.add(s);
  for (const auto& d : rec.decisions) {
    if (d) js_.add(*d);
  }
}

void RunAccumulator::add_decode(const DecodeResult& result) {
  for (const auto& rec : result.steps) add_step(rec);
  decode_ns_ += result.wall_time_ns;
}

void RunAccumulator::merge(const RunAccumulator& other) {
  steps_ += other.steps_;
  accepted_ += other.accepted_;
  emitted_ += other.emitted_;
  evaluated_ += other.evaluated_;
  total_ns_ += other.total_ns_;
  head_ns_ += other.head_ns_;
  decode_ns_ += other.decode_ns_;
  agreement_.merge(other.agreement_);
  js_.merge(other.js_);
}

RunSummary RunAccumulator::summary() const {
  RunSummary s;
  s.steps = steps_;
  s.tokens_emitted = emitted_;
  s.positions_evaluated = evaluated_;
  s.positions_accepted = accepted_;
  if (steps_ > 0) {
    s.tau_draft_only = static_cast<double>(accepted_) / static_cast<double>(steps_);
    s.tau_with_bonus = static_cast<double>(accepted_ + steps_) / static_cast<double>(steps_);
  }
  if (decode_ns_ > 0) {
    s.tokens_per_second = static_cast<double>(emitted_) * 1e9 / static_cast<double>(decode_ns_);
  }
  if (total_ns_ > 0) {
    s.head_time_fraction = static_cast<double>(head_ns_) / static_cast<double>(total_ns_);
  }
  s.unanimity_ratio = agreement_.unanimity_ratio();
  s.agreement_histogram = agreement_.histogram();
  s.mean_prob_by_agreement = agreement_.mean_prob_by_size();
  s.js = js_;
  return s;
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json partition_json(const JsPartition& p) {
  if (p.count == 0) return nullptr;
  return {{"count", p.count},
          {"mean_js_centroid_draft", *p.mean_js_centroid_draft()},
          {"mean_js_centroid_heads", *p.mean_js_centroid_heads()}};
}

}  // namespace

nlohmann::json to_json(const RunSummary& s) {
  nlohmann::json probs = nlohmann::json::array();
  for (const auto& p : s.mean_prob_by_agreement) probs.push_back(optional_json(p));
  // nlohmann::json keeps keys sorted, so the serialized layout is fixed.
  return {
      {"tau_with_bonus", s.tau_with_bonus},
      {"tau_draft_only", s.tau_draft_only},
      {"steps", s.steps},
      {"tokens_emitted", s.tokens_emitted},
      {"tokens_per_second", s.tokens_per_second},
      {"head_time_fraction", s.head_time_fraction},
      {"unanimity_ratio", optional_json(s.unanimity_ratio)},
      {"agreement_histogram", s.agreement_histogram},
      {"mean_prob_by_agreement", probs},
      {"js_stats", {{"dispersed", partition_json(s.js.dispersed)},
                    {"concentrated", partition_json(s.js.concentrated)}}},
      {"positions_evaluated", s.positions_evaluated},
      {"positions_accepted", s.positions_accepted},
      {"acceptance_rate", s.positions_evaluated > 0
                              ? nlohmann::json(static_cast<double>(s.positions_accepted) /
                                               static_cast<double>(s.positions_evaluated))
                              : nlohmann::json(nullptr)},
  };
}

}  // namespace dropmatch
