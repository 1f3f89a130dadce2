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

#include "json.hpp"

#include "dropmatch/acceptance.hpp"
#include "dropmatch/engine.hpp"
#include "dropmatch/mc_head.hpp"

namespace dropmatch {

struct TauPair {
  double with_bonus = 0.0;
  double draft_only = 0.0;
};

/// Mean accepted draft tokens per verification step, with and without the
/// bonus token. Throws kInvalidInput on an empty list.
TauPair mean_acceptance_length(std::span<const StepRecord> records);

/// Histogram of plurality sizes (index s - 1 for size s) and the mean
/// no-dropout probability of the plurality token at each size.
class AgreementStats {
 public:
  AgreementStats() = default;
  explicit AgreementStats(std::size_t heads) : counts_(heads, 0), prob_sums_(heads, 0.0) {}

  void add(std::size_t plurality_size, double plurality_prob);
  void add(const PositionStats& s) { add(s.plurality_size, s.plurality_prob); }
  void add(const HeadSampleSet& samples);
  void merge(const AgreementStats& other);

  std::size_t heads() const noexcept { return counts_.size(); }
  std::uint64_t positions() const noexcept;
  const std::vector<std::uint64_t>& histogram() const noexcept { return counts_; }
  std::vector<std::optional<double>> mean_prob_by_size() const;
  /// Fraction of positions where all K heads agree; absent with no positions.
  std::optional<double> unanimity_ratio() const;

 private:
  std::vector<std::uint64_t> counts_;
  std::vector<double> prob_sums_;
};

/// All sets must share K.
AgreementStats agreement_stats(std::span<const HeadSampleSet> positions);

struct JsPartition {
  std::uint64_t count = 0;
  double sum_js_centroid_draft = 0.0;
  double sum_js_centroid_heads = 0.0;

  std::optional<double> mean_js_centroid_draft() const;
  std::optional<double> mean_js_centroid_heads() const;
};

/// Accepted DropMatch positions split by the branch that accepted them:
/// js_pass counts as dispersed, majority_pass as concentrated.
struct JsStats {
  JsPartition dispersed;
  JsPartition concentrated;

  void add(const AcceptanceDecision& d);
  void merge(const JsStats& other);
};

/// Uses the JS scalars recorded in the decisions.
JsStats js_stats(std::span<const AcceptanceDecision> decisions);
/// Recomputes the per-head term from the matching sample sets.
JsStats js_stats(std::span<const AcceptanceDecision> decisions,
                 std::span<const HeadSampleSet> samples);

/// sum(head time) / sum(total time); 0 when no time was recorded.
double head_time_fraction(std::span<const StepRecord> records);

struct OverheadReport {
  double js_fraction = 0.0;
  double greedy_fraction = 0.0;
  double delta = 0.0;  // js_fraction - greedy_fraction
};

/// Head-time fractions of a DropMatch run and a greedy-match run over the
/// same seeds.
OverheadReport overhead_report(std::span<const StepRecord> dropmatch_records,
                               std::span<const StepRecord> greedy_records);

struct RunSummary {
  double tau_with_bonus = 0.0;
  double tau_draft_only = 0.0;
  std::uint64_t steps = 0;
  std::uint64_t tokens_emitted = 0;
  double tokens_per_second = 0.0;
  double head_time_fraction = 0.0;
  std::optional<double> unanimity_ratio;
  std::vector<std::uint64_t> agreement_histogram;
  std::vector<std::optional<double>> mean_prob_by_agreement;
  JsStats js;
  std::uint64_t positions_evaluated = 0;
  std::uint64_t positions_accepted = 0;
};

/// Per-stream accumulator. merge() is associative and commutative, so
/// streams may be combined in any order.
class RunAccumulator {
 public:
  explicit RunAccumulator(std::size_t heads = 0) : agreement_(heads) {}

  void add_step(const StepRecord& rec);
  void add_decode(const DecodeResult& result);
  void merge(const RunAccumulator& other);
  RunSummary summary() const;

 private:
  std::uint64_t steps_ = 0;
  std::uint64_t accepted_ = 0;
  std::uint64_t emitted_ = 0;
  std::uint64_t evaluated_ = 0;
  std::int64_t total_ns_ = 0;
  std::int64_t head_ns_ = 0;
  std::int64_t decode_ns_ = 0;
  AgreementStats agreement_;
  JsStats js_;
};

nlohmann::json to_json(const RunSummary& summary);

}  // namespace dropmatch
