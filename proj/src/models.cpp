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

#include "dropmatch/models.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"

#include "dropmatch/error.hpp"
#include "dropmatch/rng.hpp"

namespace dropmatch {

using nlohmann::json;

HiddenState LanguageModel::hidden(std::span<const TokenId>) const {
  fail(ErrorKind::kInvalidInput, "model has no hidden state");
}

// ---------------------------------------------------------------------------
// TableLM

TableLM::TableLM(std::size_t vocab_size, std::size_t order)
    : vocab_size_(vocab_size), order_(order) {
  if (vocab_size < 2) fail(ErrorKind::kInvalidConfig, "table LM needs a vocabulary of at least 2");
  if (order < 1) fail(ErrorKind::kInvalidConfig, "table LM order must be >= 1");
}

TableLM TableLM::random(std::size_t vocab_size, std::size_t order, std::uint64_t seed,
                        double sharpness) {
  TableLM lm(vocab_size, order);
  const std::size_t width = order - 1;
  std::size_t rows = 1;
  for (std::size_t i = 0; i < width; ++i) rows *= vocab_size;

  std::vector<TokenId> context(width, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t code = r;
    for (std::size_t i = width; i-- > 0;) {
      context[i] = static_cast<TokenId>(code % vocab_size);
      code /= vocab_size;
    }
    CounterStream stream(seed, StreamDomain::kTableInit, r);
    std::vector<double> scores(vocab_size);
    for (double& s : scores) s = sharpness * stream.normal();
    lm.table_.emplace(context, softmax(LogitVector(std::move(scores))));
  }
  return lm;
}

void TableLM::set(std::vector<TokenId> context, ProbDist dist) {
  if (context.size() != order_ - 1) {
    fail(ErrorKind::kInvalidInput, "table context must have order - 1 tokens");
  }
  if (dist.size() != vocab_size_) fail(ErrorKind::kInvalidInput, "table row has the wrong size");
  table_.insert_or_assign(std::move(context), std::move(dist));
}

ProbDist TableLM::next_dist(std::span<const TokenId> context) const {
  const std::size_t width = order_ - 1;
  if (context.size() >= width) {
    std::vector<TokenId> key(context.end() - static_cast<std::ptrdiff_t>(width), context.end());
    if (auto it = table_.find(key); it != table_.end()) return it->second;
  }
  return ProbDist::uniform(vocab_size_);
}

ProbDist table_lm_next(const TableLM& model, std::span<const TokenId> context) {
  return model.next_dist(context);
}

// ---------------------------------------------------------------------------
// Neural LM

namespace {

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, double scale,
                            std::uint64_t seed, std::uint64_t which) {
  DenseMatrix m(rows, cols);
  CounterStream stream(seed, StreamDomain::kParams, which);
  for (double& x : m.data()) x = scale * stream.normal();
  return m;
}

void perturb(DenseMatrix& m, double epsilon, std::uint64_t seed, std::uint64_t which) {
  if (epsilon == 0.0 || m.data().empty()) return;
  double sq = 0.0;
  for (double x : m.data()) sq += x * x;
  const double rms = std::sqrt(sq / static_cast<double>(m.data().size()));
  CounterStream stream(seed, StreamDomain::kPerturb, which);
  for (double& x : m.data()) x += epsilon * rms * stream.normal();
}

void check_tokens(std::span<const TokenId> context, std::size_t vocab_size) {
  for (TokenId t : context) {
    if (t >= vocab_size) {
      fail(ErrorKind::kInvalidInput, "token id " + std::to_string(t) + " is outside the vocabulary");
    }
  }
}

}  // namespace

NeuralLMParams make_neural_params(const NeuralLMConfig& config) {
  if (config.vocab_size < 2 || config.hidden_dim < 1 || config.context < 1 ||
      (config.blocks > 0 && config.ffn_dim < 1)) {
    fail(ErrorKind::kInvalidConfig, "neural LM shape is degenerate");
  }
  const std::size_t d = config.hidden_dim;
  const std::size_t v = config.vocab_size;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  NeuralLMParams p;
  p.vocab_size = v;
  p.hidden_dim = d;
  p.context = config.context;

  // Unit-scale head rows; the embedding is built from them before scaling.
  DenseMatrix head = gaussian_matrix(v, d, 1.0, config.seed, 2);

  p.embedding = gaussian_matrix(d, v, config.embed_noise, config.seed, 0);
  for (std::size_t u = 0; u < v; ++u) {
    CounterStream picks(config.seed, StreamDomain::kParams, 3, u);
    double weight = 1.0;
    for (std::size_t k = 0; k < config.successors; ++k) {
      const std::size_t next = picks.below(v);
      for (std::size_t r = 0; r < d; ++r) p.embedding(r, u) += weight * head(next, r);
      weight *= config.successor_decay;
    }
  }

  p.mixing = gaussian_matrix(d, d, config.mixing_noise * inv_sqrt_d, config.seed, 1);
  for (std::size_t r = 0; r < d; ++r) p.mixing(r, r) += 1.0;

  for (double& w : head.data()) w *= config.head_scale;
  p.head = HeadWeights(std::move(head));

  for (std::size_t b = 0; b < config.blocks; ++b) {
    const double down_scale = 0.1 / std::sqrt(static_cast<double>(config.ffn_dim));
    p.blocks.push_back(ResidualBlock{
        gaussian_matrix(config.ffn_dim, d, inv_sqrt_d, config.seed, 16 + 2 * b),
        gaussian_matrix(d, config.ffn_dim, down_scale, config.seed, 17 + 2 * b)});
  }
  return p;
}

HiddenState neural_lm_hidden(const NeuralLMParams& params, std::span<const TokenId> context) {
  if (context.empty()) fail(ErrorKind::kInvalidInput, "neural LM needs a non-empty context");
  check_tokens(context, params.vocab_size);

  const std::size_t d = params.hidden_dim;
  std::vector<double> x(d, 0.0);
  const std::size_t n = std::min(params.context, context.size());
  for (std::size_t j = 0; j < n; ++j) {
    const TokenId tok = context[context.size() - 1 - j];
    const double w = 1.0 / static_cast<double>(j + 1);
    for (std::size_t r = 0; r < d; ++r) x[r] += w * params.embedding(r, tok);
  }

  std::vector<double> inner;
  std::vector<double> delta(d);
  for (const auto& block : params.blocks) {
    inner.resize(block.up.rows());
    kernels::matvec_serial(block.up, x, inner);
    for (double& v : inner) v = std::tanh(v);
    kernels::matvec_serial(block.down, inner, delta);
    for (std::size_t r = 0; r < d; ++r) x[r] += delta[r];
  }

  std::vector<double> h(d);
  kernels::matvec_serial(params.mixing, x, h);
  for (double& v : h) v = std::tanh(v);
  return HiddenState(std::move(h));
}

std::pair<HiddenState, ProbDist> neural_lm_forward(const NeuralLMParams& params,
                                                   std::span<const TokenId> context) {
  HiddenState h = neural_lm_hidden(params, context);
  ProbDist dist = softmax(head_forward(params.head, h));
  return {std::move(h), std::move(dist)};
}

NeuralLMParams make_draft_of(const NeuralLMParams& target, double epsilon, std::uint64_t seed) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    fail(ErrorKind::kInvalidConfig, "draft perturbation epsilon must be finite and >= 0");
  }
  NeuralLMParams draft = target;
  if (epsilon == 0.0) return draft;

  perturb(draft.embedding, epsilon, seed, 0);
  perturb(draft.mixing, epsilon, seed, 1);
  DenseMatrix head = draft.head.matrix();
  perturb(head, epsilon, seed, 2);
  draft.head = HeadWeights(std::move(head));
  for (std::size_t b = 0; b < draft.blocks.size(); ++b) {
    perturb(draft.blocks[b].up, epsilon, seed, 16 + 2 * b);
    perturb(draft.blocks[b].down, epsilon, seed, 17 + 2 * b);
  }
  return draft;
}

ProbDist NeuralLM::next_dist(std::span<const TokenId> context) const {
  return neural_lm_forward(params_, context).second;
}

HiddenState NeuralLM::hidden(std::span<const TokenId> context) const {
  return neural_lm_hidden(params_, context);
}

// ---------------------------------------------------------------------------
// Traces

namespace {

constexpr double kTraceNormTolerance = 1e-6;

std::vector<double> number_array(const json& j, const char* field, std::size_t line) {
  const auto it = j.find(field);
  if (it == j.end() || !it->is_array()) {
    fail(ErrorKind::kParse, "line " + std::to_string(line) + ": missing array field '" + field + "'");
  }
  std::vector<double> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number()) {
      fail(ErrorKind::kParse, "line " + std::to_string(line) + ": non-numeric entry in '" + field + "'");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

std::uint64_t unsigned_field(const json& j, const char* field, std::size_t line) {
  const auto it = j.find(field);
  if (it == j.end() || !(it->is_number_unsigned() ||
                         (it->is_number_integer() && it->get<std::int64_t>() >= 0))) {
    fail(ErrorKind::kParse,
         "line " + std::to_string(line) + ": field '" + field + "' must be a non-negative integer");
  }
  return it->get<std::uint64_t>();
}

}  // namespace

Trace parse_trace(std::istream& in) {
  Trace trace;
  std::string text;
  std::size_t line_no = 0;
  std::optional<std::uint64_t> last_step;

  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;

    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object()) fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": not a JSON object");

    if (!trace.header) {
      if (!j.value("header", false)) {
        fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": expected the header line first");
      }
      for (const auto& [key, _] : j.items()) {
        if (key != "header" && key != "d" && key != "v") {
          fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": unknown header field '" + key + "'");
        }
      }
      TraceHeader header{unsigned_field(j, "d", line_no), unsigned_field(j, "v", line_no)};
      if (header.hidden_dim == 0 || header.vocab_size < 2) {
        fail(ErrorKind::kValidation, "trace header declares a degenerate shape");
      }
      trace.header = header;
      continue;
    }

    for (const auto& [key, _] : j.items()) {
      if (key != "step" && key != "hidden" && key != "draft_probs" && key != "draft_token") {
        fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": unknown field '" + key + "'");
      }
    }
    const std::uint64_t step = unsigned_field(j, "step", line_no);
    const std::string where = "step " + std::to_string(step);
    std::vector<double> hidden = number_array(j, "hidden", line_no);
    std::vector<double> probs = number_array(j, "draft_probs", line_no);
    const std::uint64_t token = unsigned_field(j, "draft_token", line_no);

    if (last_step && step <= *last_step) {
      fail(ErrorKind::kValidation, where + ": steps must be strictly increasing");
    }
    last_step = step;
    if (hidden.size() != trace.header->hidden_dim) {
      fail(ErrorKind::kValidation, where + ": hidden has " + std::to_string(hidden.size()) +
                                       " entries, header says d = " +
                                       std::to_string(trace.header->hidden_dim));
    }
    if (probs.size() != trace.header->vocab_size) {
      fail(ErrorKind::kValidation, where + ": draft_probs has " + std::to_string(probs.size()) +
                                       " entries, header says v = " +
                                       std::to_string(trace.header->vocab_size));
    }
    if (token >= trace.header->vocab_size) {
      fail(ErrorKind::kValidation, where + ": draft_token outside the vocabulary");
    }

    TraceRecord rec;
    rec.step = step;
    rec.draft_token = static_cast<TokenId>(token);
    try {
      rec.hidden = HiddenState(std::move(hidden));
      rec.draft_probs = ProbDist::validated(std::move(probs), kTraceNormTolerance);
    } catch (const Error& e) {
      fail(ErrorKind::kValidation, where + ": " + e.what());
    }
    trace.records.push_back(std::move(rec));
  }
  return trace;
}

Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open trace file '" + path + "'");
  return parse_trace(in);
}

void write_trace(std::ostream& out, const TraceHeader& header,
                 std::span<const TraceRecord> records) {
  out << json{{"header", true}, {"d", header.hidden_dim}, {"v", header.vocab_size}}.dump() << '\n';
  for (const auto& rec : records) {
    json j;
    j["step"] = rec.step;
    j["hidden"] = std::vector<double>(rec.hidden.values().begin(), rec.hidden.values().end());
    j["draft_probs"] = rec.draft_probs.vec();
    j["draft_token"] = rec.draft_token;
    out << j.dump() << '\n';
  }
}

void save_trace(const std::string& path, const TraceHeader& header,
                std::span<const TraceRecord> records) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write trace file '" + path + "'");
  write_trace(out, header, records);
  if (!out) fail(ErrorKind::kIo, "failed writing trace file '" + path + "'");
}

TraceReplayModel::TraceReplayModel(Trace trace, HeadWeights head)
    : trace_(std::move(trace)), head_(std::move(head)) {
  if (trace_.header && (trace_.header->hidden_dim != head_.hidden_dim() ||
                        trace_.header->vocab_size != head_.vocab_size())) {
    fail(ErrorKind::kValidation,
         "trace header (d = " + std::to_string(trace_.header->hidden_dim) +
             ", v = " + std::to_string(trace_.header->vocab_size) +
             ") does not match the configured head (d = " + std::to_string(head_.hidden_dim()) +
             ", v = " + std::to_string(head_.vocab_size()) + ")");
  }
}

ProbDist TraceReplayModel::next_dist(std::span<const TokenId>) const {
  fail(ErrorKind::kInvalidInput, "a trace replay model is indexed by record, not by context");
}

}  // namespace dropmatch
