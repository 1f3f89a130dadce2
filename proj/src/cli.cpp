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

#include "dropmatch/cli.hpp"

#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "dropmatch/error.hpp"
#include "dropmatch/rng.hpp"

namespace dropmatch::cli {

using nlohmann::json;

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidConfig: return kExitConfig;
    case ErrorKind::kIo: return kExitIo;
    case ErrorKind::kParse:
    case ErrorKind::kValidation:
    case ErrorKind::kInvalidInput: return kExitValidation;
  }
  return kExitValidation;
}

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  fail(ErrorKind::kInvalidConfig, "config field '" + field + "': " + why);
}

// Reads an object's keys one at a time and rejects whatever is left over.
class Fields {
 public:
  Fields(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) bad(prefix_.empty() ? "<root>" : prefix_, "expected a JSON object");
  }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string name(const std::string& key) const {
    return prefix_.empty() ? key : prefix_ + "." + key;
  }

  std::optional<std::uint64_t> u64(const std::string& key) {
    const json* v = raw(key);
    if (v == nullptr) return std::nullopt;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer() && v->get<std::int64_t>() >= 0) return v->get<std::uint64_t>();
    bad(name(key), "expected a non-negative integer");
  }

  std::optional<double> real(const std::string& key) {
    const json* v = raw(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_number()) bad(name(key), "expected a number");
    return v->get<double>();
  }

  std::optional<std::string> text(const std::string& key) {
    const json* v = raw(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_string()) bad(name(key), "expected a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.contains(key)) bad(name(key), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

template <typename T>
void assign(std::optional<T> v, T& dst) {
  if (v) dst = *v;
}

void assign_size(std::optional<std::uint64_t> v, std::size_t& dst) {
  if (v) dst = static_cast<std::size_t>(*v);
}

template <typename Enum>
Enum parse_enum(const std::string& field, const std::string& value,
                const std::map<std::string, Enum>& options) {
  if (auto it = options.find(value); it != options.end()) return it->second;
  std::string allowed;
  for (const auto& [k, _] : options) allowed += (allowed.empty() ? "" : ", ") + k;
  bad(field, "'" + value + "' is not one of {" + allowed + "}");
}

Criterion criterion_from(const std::string& field, const std::string& value) {
  if (auto c = parse_criterion(value)) return *c;
  bad(field, "'" + value + "' is not one of {lossless, greedy_match, naive, dropmatch_js}");
}

std::vector<TokenId> token_list(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) bad(field, "expected a non-empty array of token ids");
  std::vector<TokenId> out;
  for (const auto& t : j) {
    if (!t.is_number_unsigned() && !(t.is_number_integer() && t.get<std::int64_t>() >= 0)) {
      bad(field, "token ids must be non-negative integers");
    }
    out.push_back(t.get<TokenId>());
  }
  return out;
}

TargetSpec parse_target(const json& j) {
  TargetSpec spec;
  Fields f(j, "model");
  if (auto type = f.text("type")) {
    spec.kind = parse_enum<TargetSpec::Kind>(
        "model.type", *type, {{"neural", TargetSpec::Kind::kNeural}, {"table", TargetSpec::Kind::kTable}});
  }
  auto& n = spec.neural;
  assign_size(f.u64("vocab_size"), n.vocab_size);
  assign_size(f.u64("hidden_dim"), n.hidden_dim);
  assign_size(f.u64("context"), n.context);
  assign_size(f.u64("blocks"), n.blocks);
  assign_size(f.u64("ffn_dim"), n.ffn_dim);
  assign_size(f.u64("successors"), n.successors);
  assign(f.real("successor_decay"), n.successor_decay);
  assign(f.real("embed_noise"), n.embed_noise);
  assign(f.real("mixing_noise"), n.mixing_noise);
  assign(f.real("head_scale"), n.head_scale);
  assign(f.u64("seed"), n.seed);
  assign_size(f.u64("order"), spec.table_order);
  assign(f.real("sharpness"), spec.table_sharpness);
  f.finish();

  if (n.vocab_size < 2) bad("model.vocab_size", "must be >= 2");
  if (n.vocab_size > 65536) bad("model.vocab_size", "must be <= 65536");
  if (n.hidden_dim < 1) bad("model.hidden_dim", "must be >= 1");
  if (n.context < 1) bad("model.context", "must be >= 1");
  if (spec.table_order < 1 || spec.table_order > 3) bad("model.order", "must be 1, 2 or 3");
  return spec;
}

DraftSpec parse_draft(const json& j) {
  DraftSpec spec;
  Fields f(j, "draft");
  if (auto type = f.text("type")) {
    spec.kind = parse_enum<DraftSpec::Kind>(
        "draft.type", *type, {{"perturbed", DraftSpec::Kind::kPerturbed}, {"table", DraftSpec::Kind::kTable}});
  }
  assign(f.real("epsilon"), spec.epsilon);
  assign(f.u64("seed"), spec.seed);
  assign_size(f.u64("order"), spec.table_order);
  assign(f.real("sharpness"), spec.table_sharpness);
  f.finish();
  if (!(spec.epsilon >= 0.0)) bad("draft.epsilon", "must be >= 0");
  if (spec.table_order < 1 || spec.table_order > 3) bad("draft.order", "must be 1, 2 or 3");
  return spec;
}

std::vector<std::vector<TokenId>> random_prompts(const json& j, std::size_t vocab_size) {
  Fields f(j, "random_prompts");
  std::size_t count = 1;
  std::size_t length = 4;
  std::uint64_t seed = 0;
  assign_size(f.u64("count"), count);
  assign_size(f.u64("length"), length);
  assign(f.u64("seed"), seed);
  f.finish();
  if (count < 1) bad("random_prompts.count", "must be >= 1");
  if (length < 1) bad("random_prompts.length", "must be >= 1");

  std::vector<std::vector<TokenId>> prompts(count);
  for (std::size_t i = 0; i < count; ++i) {
    CounterStream stream(seed, StreamDomain::kPrompt, i);
    for (std::size_t t = 0; t < length; ++t) {
      prompts[i].push_back(static_cast<TokenId>(stream.below(vocab_size)));
    }
  }
  return prompts;
}

void parse_engine_fields(Fields& f, EngineConfig& e) {
  if (auto c = f.text("criterion")) e.criterion = criterion_from("criterion", *c);
  assign_size(f.u64("L"), e.draft_length);
  assign_size(f.u64("K"), e.heads);
  assign(f.real("p_drop"), e.p_drop);
  assign(f.u64("seed"), e.seed);
  assign_size(f.u64("max_tokens"), e.max_tokens);
  if (auto m = f.text("mode")) {
    e.mode = parse_enum<DecodeMode>("mode", *m,
                                    {{"greedy", DecodeMode::kGreedy}, {"sampled", DecodeMode::kSampled}});
  }
  if (auto r = f.text("rejection_replacement")) {
    e.rejection_replacement = parse_enum<ReplacementPolicy>(
        "rejection_replacement", *r,
        {{"deterministic_argmax", ReplacementPolicy::kDeterministicArgmax},
         {"centroid_argmax", ReplacementPolicy::kCentroidArgmax}});
  }
  if (auto r = f.text("majority_rule")) {
    e.majority_rule = parse_enum<MajorityRule>(
        "majority_rule", *r, {{"plurality", MajorityRule::kPlurality}, {"strict", MajorityRule::kStrict}});
  }
  if (const json* eos = f.raw("eos_token"); eos != nullptr && !eos->is_null()) {
    if (!eos->is_number_unsigned()) bad("eos_token", "expected a token id or null");
    e.eos_token = eos->get<TokenId>();
  }
  if (auto t = f.text("timing")) {
    e.record_timing = parse_enum<bool>("timing", *t, {{"wall", true}, {"none", false}});
  }
  if (auto x = f.text("exec")) {
    e.exec = parse_enum<ExecPolicy>("exec", *x,
                                    {{"serial", ExecPolicy::kSerial}, {"parallel", ExecPolicy::kParallel}});
  }
}

void validate_run(const RunConfig& c) {
  c.engine.validate();
  const std::size_t v = c.target.neural.vocab_size;
  if (c.engine.eos_token && *c.engine.eos_token >= v) bad("eos_token", "outside the vocabulary");
  if (c.engine.samples_heads() && c.target.kind != TargetSpec::Kind::kNeural) {
    bad("criterion", std::string(to_string(c.engine.criterion)) +
                         " needs a neural target (the head sampling uses its hidden state)");
  }
  if (c.draft.kind == DraftSpec::Kind::kPerturbed && c.target.kind != TargetSpec::Kind::kNeural) {
    bad("draft.type", "a perturbed draft needs a neural target");
  }
  if (c.prompts.empty()) bad("prompt", "no prompts");
  for (const auto& p : c.prompts) {
    for (TokenId t : p) {
      if (t >= v) bad("prompt", "token id " + std::to_string(t) + " outside the vocabulary");
    }
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kInvalidConfig, "'" + path + "' is not valid JSON: " + e.what());
  }
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  RunConfig c;
  Fields f(j, "");
  parse_engine_fields(f, c.engine);
  if (const json* m = f.raw("model")) c.target = parse_target(*m);
  if (const json* d = f.raw("draft")) c.draft = parse_draft(*d);

  const json* prompt = f.raw("prompt");
  const json* prompts = f.raw("prompts");
  const json* random = f.raw("random_prompts");
  if ((prompt != nullptr) + (prompts != nullptr) + (random != nullptr) > 1) {
    bad("prompt", "give only one of prompt, prompts, random_prompts");
  }
  if (prompt != nullptr) {
    c.prompts.push_back(token_list(*prompt, "prompt"));
  } else if (prompts != nullptr) {
    if (!prompts->is_array() || prompts->empty()) bad("prompts", "expected a non-empty array");
    for (const auto& p : *prompts) c.prompts.push_back(token_list(p, "prompts"));
  } else if (random != nullptr) {
    c.prompts = random_prompts(*random, c.target.neural.vocab_size);
  } else {
    c.prompts.push_back({0});
  }
  f.finish();
  validate_run(c);
  return c;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(read_json_file(path)); }

std::size_t SweepSpec::cell_count() const noexcept {
  return criteria.size() * p_drops.size() * heads.size() * draft_lengths.size() *
         epsilons.size() * repetitions;
}

SweepSpec parse_sweep(const json& j) {
  SweepSpec s;
  Fields f(j, "");
  if (const json* base = f.raw("base")) s.base = parse_run_config(*base);
  else s.base = parse_run_config(json::object());

  auto list = [&](const std::string& key, auto convert) {
    using T = decltype(convert(json{}));
    std::vector<T> out;
    const json* v = f.raw(key);
    if (v == nullptr) return out;
    if (!v->is_array() || v->empty()) bad(key, "expected a non-empty array");
    for (const auto& x : *v) out.push_back(convert(x));
    return out;
  };
  auto as_real = [](const json& x) {
    if (!x.is_number()) bad("sweep", "expected numbers");
    return x.get<double>();
  };
  auto as_size = [](const json& x) {
    if (!x.is_number_unsigned()) bad("sweep", "expected non-negative integers");
    return x.get<std::size_t>();
  };
  auto as_criterion = [](const json& x) {
    if (!x.is_string()) bad("criterion", "expected strings");
    return criterion_from("criterion", x.get<std::string>());
  };

  s.criteria = list("criterion", as_criterion);
  s.p_drops = list("p_drop", as_real);
  s.heads = list("K", as_size);
  s.draft_lengths = list("L", as_size);
  s.epsilons = list("epsilon", as_real);
  assign_size(f.u64("repetitions"), s.repetitions);
  s.base_seed = s.base.engine.seed;
  assign(f.u64("seed"), s.base_seed);
  assign_size(f.u64("max_cells"), s.max_cells);
  f.finish();

  if (s.criteria.empty()) s.criteria = {s.base.engine.criterion};
  if (s.p_drops.empty()) s.p_drops = {s.base.engine.p_drop};
  if (s.heads.empty()) s.heads = {s.base.engine.heads};
  if (s.draft_lengths.empty()) s.draft_lengths = {s.base.engine.draft_length};
  if (s.epsilons.empty()) s.epsilons = {s.base.draft.epsilon};
  if (s.repetitions < 1) bad("repetitions", "must be >= 1");

  // Validate every value once so a bad cell fails before anything runs.
  for (double p : s.p_drops) {
    if (!(p >= 0.0 && p < 1.0)) bad("p_drop", "must lie in [0, 1), got " + format_real(p));
  }
  for (auto k : s.heads) if (k < 1) bad("K", "must be >= 1");
  for (auto l : s.draft_lengths) if (l < 1) bad("L", "must be >= 1");
  for (double e : s.epsilons) if (!(e >= 0.0)) bad("epsilon", "must be >= 0");
  for (auto c : s.criteria) {
    RunConfig probe = s.base;
    probe.engine.criterion = c;
    validate_run(probe);
  }
  if (s.cell_count() > s.max_cells) {
    bad("max_cells", "sweep has " + std::to_string(s.cell_count()) + " cells, cap is " +
                         std::to_string(s.max_cells));
  }
  return s;
}

SweepSpec load_sweep(const std::string& path) { return parse_sweep(read_json_file(path)); }

// ---------------------------------------------------------------------------

namespace {

std::unique_ptr<NeuralLM> neural_target(const TargetSpec& t) {
  return std::make_unique<NeuralLM>(make_neural_params(t.neural));
}

}  // namespace

BuiltModels build_models(const TargetSpec& target, const DraftSpec& draft) {
  BuiltModels m;
  const std::size_t v = target.neural.vocab_size;
  if (target.kind == TargetSpec::Kind::kNeural) {
    auto t = neural_target(target);
    if (draft.kind == DraftSpec::Kind::kPerturbed) {
      m.draft = std::make_unique<NeuralLM>(make_draft_of(t->params(), draft.epsilon, draft.seed));
    }
    m.target = std::move(t);
  } else {
    m.target = std::make_unique<TableLM>(
        TableLM::random(v, target.table_order, target.neural.seed, target.table_sharpness));
    if (draft.kind == DraftSpec::Kind::kPerturbed) {
      fail(ErrorKind::kInvalidConfig, "a perturbed draft needs a neural target");
    }
  }
  if (draft.kind == DraftSpec::Kind::kTable) {
    m.draft = std::make_unique<TableLM>(
        TableLM::random(v, draft.table_order, draft.seed, draft.table_sharpness));
  }
  return m;
}

RunOutcome execute_run(const RunConfig& config, const LanguageModel& draft,
                       const LanguageModel& target, TraceSink* trace) {
  if (trace != nullptr && config.prompts.size() != 1) {
    fail(ErrorKind::kInvalidConfig, "recording a trace needs exactly one prompt");
  }
  const std::size_t heads = config.engine.samples_heads() ? config.engine.heads : 0;
  RunAccumulator acc(heads);
  RunOutcome outcome;
  for (std::size_t i = 0; i < config.prompts.size(); ++i) {
    EngineConfig engine = config.engine;
    engine.seed = stream_seed(config.engine.seed, i);
    DecodeResult result = decode(draft, target, config.prompts[i], engine, trace);
    RunAccumulator stream(heads);
    stream.add_decode(result);
    acc.merge(stream);
    outcome.tokens.push_back(std::move(result.tokens));
  }
  outcome.summary = acc.summary();
  return outcome;
}

json run_output_json(const RunOutcome& outcome) {
  json j = to_json(outcome.summary);
  j["tokens"] = outcome.tokens;
  return j;
}

RunSummary replay_trace(const Trace& trace, const HeadWeights& head, const EngineConfig& config) {
  config.validate();
  if (!trace.header) fail(ErrorKind::kValidation, "trace is empty (no header)");
  if (trace.header->hidden_dim != head.hidden_dim() || trace.header->vocab_size != head.vocab_size()) {
    fail(ErrorKind::kValidation,
         "trace header (d = " + std::to_string(trace.header->hidden_dim) + ", v = " +
             std::to_string(trace.header->vocab_size) + ") does not match the config (d = " +
             std::to_string(head.hidden_dim()) + ", v = " + std::to_string(head.vocab_size()) + ")");
  }
  if (trace.records.empty()) fail(ErrorKind::kValidation, "trace has no steps");

  using Clock = std::chrono::steady_clock;
  RunAccumulator acc(config.samples_heads() ? config.heads : 0);
  StepRecord rec;
  auto close_step = [&]() {
    rec.tokens_emitted = rec.accepted_count + 1;
    acc.add_step(rec);
    rec = StepRecord{};
  };

  const auto start = Clock::now();
  for (const TraceRecord& r : trace.records) {
    const DraftToken draft{r.draft_token, r.draft_probs};
    AcceptanceDecision decision;
    const auto t0 = Clock::now();
    if (config.samples_heads()) {
      const auto keys = head_stream_keys(config.seed, r.step, config.heads);
      const HeadSampleSet samples = mc_head_sample(head, r.hidden, keys, config.p_drop, config.exec);
      decision = config.criterion == Criterion::kNaive
                     ? naive_match(draft, samples)
                     : dropmatch_accept(draft, samples, config.majority_rule);
      const Plurality pl = plurality(samples.argmax_tokens);
      rec.head_stats.push_back(PositionStats{pl.count, pl.token, samples.deterministic_dist[pl.token]});
    } else {
      const ProbDist dist = softmax(head_forward(head, r.hidden, config.exec));
      if (config.criterion == Criterion::kGreedyMatch) {
        decision = greedy_match(draft, dist);
      } else {
        CounterStream stream(config.seed, StreamDomain::kLossless, r.step);
        decision.accepted = lossless_accept(draft, dist, stream, config.mode).accepted;
        decision.branch = decision.accepted ? AcceptBranch::kLosslessPass : AcceptBranch::kRejected;
      }
    }
    if (config.record_timing) {
      const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
      rec.wall_time_head_ns += ns;
      rec.wall_time_total_ns += ns;
    }
    rec.decisions.push_back(decision);
    if (decision.accepted) ++rec.accepted_count;
    if (!decision.accepted || rec.accepted_count == config.draft_length) close_step();
  }
  if (!rec.decisions.empty()) close_step();

  RunSummary s = acc.summary();
  if (config.record_timing) {
    const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
    if (ns > 0) s.tokens_per_second = static_cast<double>(s.tokens_emitted) * 1e9 / static_cast<double>(ns);
  }
  return s;
}

std::vector<BenchRow> execute_sweep(const SweepSpec& sweep) {
  // Models are built once per distinct epsilon and shared read-only by cells.
  const BuiltModels base = build_models(sweep.base.target, sweep.base.draft);
  std::map<double, std::unique_ptr<LanguageModel>> drafts;
  for (double eps : sweep.epsilons) {
    if (drafts.contains(eps)) continue;
    DraftSpec d = sweep.base.draft;
    d.epsilon = eps;
    drafts.emplace(eps, build_models(sweep.base.target, d).draft);
  }

  std::vector<BenchRow> rows;
  rows.reserve(sweep.cell_count());
  for (auto c : sweep.criteria)
    for (double p : sweep.p_drops)
      for (auto k : sweep.heads)
        for (auto l : sweep.draft_lengths)
          for (double eps : sweep.epsilons)
            for (std::size_t rep = 0; rep < sweep.repetitions; ++rep) {
              BenchRow row;
              row.criterion = c;
              row.p_drop = p;
              row.heads = k;
              row.draft_length = l;
              row.epsilon = eps;
              row.seed = sweep.base_seed + rows.size();
              rows.push_back(row);
            }

  std::exception_ptr error;
  const auto n = static_cast<std::int64_t>(rows.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      BenchRow& row = rows[static_cast<std::size_t>(i)];
      RunConfig cell = sweep.base;
      cell.engine.criterion = row.criterion;
      cell.engine.p_drop = row.p_drop;
      cell.engine.heads = row.heads;
      cell.engine.draft_length = row.draft_length;
      cell.engine.seed = row.seed;
      row.summary = execute_run(cell, *drafts.at(row.epsilon), *base.target).summary;
    } catch (...) {
#pragma omp critical(dropmatch_sweep_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return rows;
}

void write_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    const RunSummary& s = r.summary;
    out << to_string(r.criterion) << ',' << format_real(r.p_drop) << ',' << r.heads << ','
        << r.draft_length << ',' << format_real(r.epsilon) << ',' << r.seed << ',' << s.steps << ','
        << format_real(s.tau_draft_only) << ',' << format_real(s.tau_with_bonus) << ','
        << s.tokens_emitted << ',' << format_real(s.tokens_per_second) << ','
        << format_real(s.head_time_fraction) << ','
        << (s.unanimity_ratio ? format_real(*s.unanimity_ratio) : std::string()) << '\n';
  }
}

// ---------------------------------------------------------------------------

namespace {

template <typename Body>
int guarded(std::ostream& err, Body body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace

int cmd_run(const std::string& config_path, const CommandOptions& opts, std::ostream& out,
            std::ostream& err) {
  return guarded(err, [&] {
    kernels::set_thread_count(opts.threads);
    RunConfig config = load_run_config(config_path);
    if (opts.seed) config.engine.seed = *opts.seed;
    const BuiltModels models = build_models(config.target, config.draft);

    TraceSink trace;
    const RunOutcome outcome =
        execute_run(config, *models.draft, *models.target, opts.trace_out ? &trace : nullptr);
    if (opts.trace_out) {
      const auto d = models.target->hidden_dim();
      if (!d) fail(ErrorKind::kInvalidConfig, "recording a trace needs a neural target");
      save_trace(*opts.trace_out, TraceHeader{*d, models.target->vocab_size()}, trace);
    }
    out << run_output_json(outcome).dump(2) << '\n';
    err << "run: " << outcome.summary.steps << " steps, tau " << outcome.summary.tau_with_bonus
        << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_bench(const std::string& sweep_path, const std::string& out_csv,
              const CommandOptions& opts, std::ostream& err) {
  return guarded(err, [&] {
    kernels::set_thread_count(opts.threads);
    SweepSpec sweep = load_sweep(sweep_path);
    if (opts.seed) sweep.base_seed = *opts.seed;
    err << "bench: " << sweep.cell_count() << " cells\n";
    const std::vector<BenchRow> rows = execute_sweep(sweep);

    std::ostringstream csv;
    write_csv(csv, rows);
    std::ofstream file(out_csv, std::ios::binary);
    if (!file) fail(ErrorKind::kIo, "cannot write '" + out_csv + "'");
    file << csv.str();
    if (!file.flush()) fail(ErrorKind::kIo, "failed writing '" + out_csv + "'");
    return static_cast<int>(kExitOk);
  });
}

int cmd_trace(const std::string& trace_path, const std::string& config_path,
              const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    kernels::set_thread_count(opts.threads);
    RunConfig config = load_run_config(config_path);
    if (opts.seed) config.engine.seed = *opts.seed;
    if (config.target.kind != TargetSpec::Kind::kNeural) {
      fail(ErrorKind::kInvalidConfig, "trace replay needs a neural model for its head weights");
    }
    const NeuralLMParams params = make_neural_params(config.target.neural);
    const Trace trace = load_trace(trace_path);
    const RunSummary summary = replay_trace(trace, params.head, config.engine);
    out << to_json(summary).dump(2) << '\n';
    err << "trace: " << trace.records.size() << " positions replayed\n";
    return static_cast<int>(kExitOk);
  });
}

}  // namespace dropmatch::cli
