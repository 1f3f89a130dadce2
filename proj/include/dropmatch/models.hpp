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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dropmatch/core_math.hpp"
#include "dropmatch/kernels.hpp"
#include "dropmatch/mc_head.hpp"

namespace dropmatch {

struct ModelCapabilities {
  bool has_hidden_state = false;
  bool is_replay = false;
};

/// A draft or target model. Implementations are immutable after
/// construction and safe to share between threads.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual std::size_t vocab_size() const = 0;
  virtual std::optional<std::size_t> hidden_dim() const { return std::nullopt; }
  virtual ModelCapabilities capabilities() const = 0;

  /// Next-token distribution after `context`.
  virtual ProbDist next_dist(std::span<const TokenId> context) const = 0;

  /// Final hidden state after `context`; only when has_hidden_state.
  virtual HiddenState hidden(std::span<const TokenId> context) const;

  /// LM head weights; nullptr when the model has no hidden state.
  virtual const HeadWeights* head_weights() const { return nullptr; }
};

// ---------------------------------------------------------------------------
// Conditional-table LM. Keyed on the last (order - 1) tokens; anything not in
// the table backs off to the uniform distribution.
class TableLM final : public LanguageModel {
 public:
  TableLM(std::size_t vocab_size, std::size_t order);

  /// Random table over every context of length order - 1; each row is the
  /// softmax of Gaussian scores times `sharpness`.
  static TableLM random(std::size_t vocab_size, std::size_t order, std::uint64_t seed,
                        double sharpness = 3.0);

  void set(std::vector<TokenId> context, ProbDist dist);

  std::size_t order() const noexcept { return order_; }
  std::size_t vocab_size() const override { return vocab_size_; }
  ModelCapabilities capabilities() const override { return {}; }
  ProbDist next_dist(std::span<const TokenId> context) const override;

  const std::map<std::vector<TokenId>, ProbDist>& table() const noexcept { return table_; }

 private:
  std::size_t vocab_size_;
  std::size_t order_;
  std::map<std::vector<TokenId>, ProbDist> table_;
};

ProbDist table_lm_next(const TableLM& model, std::span<const TokenId> context);

// ---------------------------------------------------------------------------
// Small deterministic neural LM:
//   x = sum_j w_j * E[:, token_{T-1-j}]       (last `context` tokens, w_j = 1/(j+1))
//   x = x + B2 tanh(B1 x)                      (for each residual block)
//   h = tanh(M x),  dist = softmax(W h)
//
// Parameters are seeded, not trained. To get the confident, occasionally
// multi-modal next-token distributions of a real LM, each token's embedding
// points at the (unit-scale) head rows of a few random successor tokens with
// decaying weights, plus Gaussian noise; M is identity plus noise.

struct NeuralLMConfig {
  std::size_t vocab_size = 256;
  std::size_t hidden_dim = 64;
  std::size_t context = 4;
  std::size_t blocks = 4;      // residual MLP blocks between embedding and mixing
  std::size_t ffn_dim = 1024;  // inner width of each block
  std::size_t successors = 1;  // 0 gives fully random embeddings
  double successor_decay = 0.7;
  double embed_noise = 0.3;
  double mixing_noise = 0.3;
  double head_scale = 0.15;
  std::uint64_t seed = 0;
};

struct ResidualBlock {
  DenseMatrix up;    // ffn_dim x d
  DenseMatrix down;  // d x ffn_dim
  friend bool operator==(const ResidualBlock&, const ResidualBlock&) = default;
};

struct NeuralLMParams {
  std::size_t vocab_size = 0;
  std::size_t hidden_dim = 0;
  std::size_t context = 0;
  DenseMatrix embedding;  // d x V
  std::vector<ResidualBlock> blocks;
  DenseMatrix mixing;     // d x d
  HeadWeights head;       // V x d

  friend bool operator==(const NeuralLMParams&, const NeuralLMParams&) = default;
};

/// Seeded random parameters. Throws kInvalidConfig on a degenerate shape.
NeuralLMParams make_neural_params(const NeuralLMConfig& config);

HiddenState neural_lm_hidden(const NeuralLMParams& params, std::span<const TokenId> context);

std::pair<HiddenState, ProbDist> neural_lm_forward(const NeuralLMParams& params,
                                                   std::span<const TokenId> context);

/// Copy of `target` with every matrix perturbed by epsilon * rms(matrix) * N(0, 1).
/// epsilon = 0 returns an identical copy.
NeuralLMParams make_draft_of(const NeuralLMParams& target, double epsilon, std::uint64_t seed);

class NeuralLM final : public LanguageModel {
 public:
  explicit NeuralLM(NeuralLMParams params) : params_(std::move(params)) {}

  const NeuralLMParams& params() const noexcept { return params_; }

  std::size_t vocab_size() const override { return params_.vocab_size; }
  std::optional<std::size_t> hidden_dim() const override { return params_.hidden_dim; }
  ModelCapabilities capabilities() const override { return {true, false}; }
  ProbDist next_dist(std::span<const TokenId> context) const override;
  HiddenState hidden(std::span<const TokenId> context) const override;
  const HeadWeights* head_weights() const override { return &params_.head; }

 private:
  NeuralLMParams params_;
};

// ---------------------------------------------------------------------------
// Trace files: JSON lines. A header {"header": true, "d": D, "v": V} followed
// by one record per verification position.

struct TraceHeader {
  std::size_t hidden_dim = 0;
  std::size_t vocab_size = 0;
};

struct TraceRecord {
  std::uint64_t step = 0;
  HiddenState hidden;
  ProbDist draft_probs;
  TokenId draft_token = 0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct Trace {
  std::optional<TraceHeader> header;  // absent only for an empty file
  std::vector<TraceRecord> records;
};

/// Parse errors carry the 1-based line number; normalization and shape
/// problems are validation errors naming the step.
Trace parse_trace(std::istream& in);
Trace load_trace(const std::string& path);

void write_trace(std::ostream& out, const TraceHeader& header,
                 std::span<const TraceRecord> records);
void save_trace(const std::string& path, const TraceHeader& header,
                std::span<const TraceRecord> records);

/// Target side of a trace replay: recorded hidden states plus the head they
/// are projected through. Indexed by record, not by context, so it cannot
/// drive a live decode.
class TraceReplayModel final : public LanguageModel {
 public:
  TraceReplayModel(Trace trace, HeadWeights head);

  const Trace& trace() const noexcept { return trace_; }
  std::size_t vocab_size() const override { return head_.vocab_size(); }
  std::optional<std::size_t> hidden_dim() const override { return head_.hidden_dim(); }
  ModelCapabilities capabilities() const override { return {true, true}; }
  ProbDist next_dist(std::span<const TokenId> context) const override;
  const HeadWeights* head_weights() const override { return &head_; }

 private:
  Trace trace_;
  HeadWeights head_;
};

}  // namespace dropmatch
