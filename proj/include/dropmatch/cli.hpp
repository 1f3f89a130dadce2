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
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dropmatch/engine.hpp"
#include "dropmatch/error.hpp"
#include "dropmatch/metrics.hpp"
#include "dropmatch/models.hpp"

namespace dropmatch::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitIo = 3,
  kExitValidation = 4,
};

int exit_code_for(ErrorKind kind) noexcept;

struct TargetSpec {
  enum class Kind { kNeural, kTable } kind = Kind::kNeural;
  NeuralLMConfig neural;
  // Table target only.
  std::size_t table_order = 2;
  double table_sharpness = 3.0;
};

struct DraftSpec {
  enum class Kind { kPerturbed, kTable } kind = Kind::kPerturbed;
  double epsilon = 0.1;
  std::uint64_t seed = 1;
  // Table draft only.
  std::size_t table_order = 2;
  double table_sharpness = 3.0;
};

/// Everything one `run` needs. Keys in the JSON file mirror these names.
struct RunConfig {
  EngineConfig engine;
  TargetSpec target;
  DraftSpec draft;
  std::vector<std::vector<TokenId>> prompts;
};

/// Throws kInvalidConfig naming the offending key. Unknown keys are errors.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

/// Cartesian sweep over the listed fields; unlisted fields come from `base`.
struct SweepSpec {
  RunConfig base;
  std::vector<Criterion> criteria;
  std::vector<double> p_drops;
  std::vector<std::size_t> heads;
  std::vector<std::size_t> draft_lengths;
  std::vector<double> epsilons;
  std::size_t repetitions = 1;
  std::uint64_t base_seed = 0;
  std::size_t max_cells = 10000;

  std::size_t cell_count() const noexcept;
};

SweepSpec parse_sweep(const nlohmann::json& j);
SweepSpec load_sweep(const std::string& path);

struct BuiltModels {
  std::unique_ptr<LanguageModel> target;
  std::unique_ptr<LanguageModel> draft;
};

BuiltModels build_models(const TargetSpec& target, const DraftSpec& draft);

/// Decodes every prompt as an independent stream (seeded by stream_seed)
/// and merges the per-stream metrics.
struct RunOutcome {
  RunSummary summary;
  std::vector<std::vector<TokenId>> tokens;
};

RunOutcome execute_run(const RunConfig& config, const LanguageModel& draft,
                       const LanguageModel& target, TraceSink* trace = nullptr);

nlohmann::json run_output_json(const RunOutcome& outcome);

/// Replays trace positions through the head and the configured criterion.
/// Positions are grouped into steps of at most L, closing early at a rejection.
RunSummary replay_trace(const Trace& trace, const HeadWeights& head, const EngineConfig& config);

struct BenchRow {
  Criterion criterion = Criterion::kDropMatchJs;
  double p_drop = 0.0;
  std::size_t heads = 0;
  std::size_t draft_length = 0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  RunSummary summary;
};

/// One row per cell, in declared order; cells may run in parallel.
std::vector<BenchRow> execute_sweep(const SweepSpec& sweep);

inline constexpr const char* kCsvHeader =
    "criterion,p_drop,K,L,epsilon,seed,steps,tau_draft_only,tau_with_bonus,tokens_emitted,"
    "tokens_per_second,head_time_fraction,unanimity_ratio";

void write_csv(std::ostream& out, const std::vector<BenchRow>& rows);

struct CommandOptions {
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::optional<std::string> trace_out;
};

// Command entry points. Results go to `out`, diagnostics to `err`; the
// return value is the process exit code.
int cmd_run(const std::string& config_path, const CommandOptions& opts, std::ostream& out,
            std::ostream& err);
int cmd_bench(const std::string& sweep_path, const std::string& out_csv,
              const CommandOptions& opts, std::ostream& err);
int cmd_trace(const std::string& trace_path, const std::string& config_path,
              const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace dropmatch::cli
