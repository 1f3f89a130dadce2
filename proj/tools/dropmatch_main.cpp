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

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "dropmatch/cli.hpp"

int main(int argc, char** argv) {
  namespace dc = dropmatch::cli;

  CLI::App app{"Speculative decoding with MC-dropout token acceptance"};
  app.require_subcommand(1);

  std::string config_path;
  std::string sweep_path;
  std::string out_path;
  std::string trace_path;
  std::string trace_out;
  std::optional<std::uint64_t> seed;
  int threads = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Override the configured seed");
    sub->add_option("--threads", threads, "OpenMP threads (0 = runtime default)")
        ->check(CLI::NonNegativeNumber);
  };

  CLI::App* run = app.add_subcommand("run", "Decode with one configuration; JSON summary on stdout");
  run->add_option("--config", config_path, "Run config (JSON)")->required();
  run->add_option("--trace-out", trace_out, "Also record verified positions as a JSONL trace");
  add_common(run);

  CLI::App* bench = app.add_subcommand("bench", "Run a parameter sweep; one CSV row per cell");
  bench->add_option("--sweep", sweep_path, "Sweep spec (JSON)")->required();
  bench->add_option("--out", out_path, "Output CSV path")->required();
  add_common(bench);

  CLI::App* trace = app.add_subcommand("trace", "Replay a recorded trace through the acceptance rule");
  trace->add_option("trace_file", trace_path, "Trace (JSONL)");
  trace->add_option("--trace", trace_path, "Trace (JSONL)");
  trace->add_option("--config", config_path, "Run config (JSON)")->required();
  add_common(trace);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dc::kExitConfig;
  }

  dc::CommandOptions opts;
  opts.seed = seed;
  opts.threads = threads;
  if (!trace_out.empty()) opts.trace_out = trace_out;

  if (run->parsed()) return dc::cmd_run(config_path, opts, std::cout, std::cerr);
  if (bench->parsed()) return dc::cmd_bench(sweep_path, out_path, opts, std::cerr);
  if (trace_path.empty()) {
    std::cerr << "error: trace needs a trace file\n";
    return dc::kExitConfig;
  }
  return dc::cmd_trace(trace_path, config_path, opts, std::cout, std::cerr);
}
