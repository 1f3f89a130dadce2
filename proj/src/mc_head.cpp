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

#include "dropmatch/mc_head.hpp"

#include <cmath>
#include <cstdint>
#include <exception>
#include <string>

#include "dropmatch/error.hpp"

namespace dropmatch {

HiddenState::HiddenState(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      fail(ErrorKind::kInvalidInput, "hidden state entry " + std::to_string(i) + " is not finite");
    }
  }
}

HeadWeights::HeadWeights(DenseMatrix matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() == 0 || matrix_.cols() == 0) {
    fail(ErrorKind::kInvalidInput, "head weights have an empty shape");
  }
  for (double w : matrix_.data()) {
    if (!std::isfinite(w)) fail(ErrorKind::kInvalidInput, "head weights contain a non-finite entry");
  }
}

void validate_p_drop(double p_drop) {
  if (!(p_drop >= 0.0 && p_drop < 1.0)) {
    fail(ErrorKind::kInvalidConfig,
         "p_drop must lie in [0, 1), got " + std::to_string(p_drop));
  }
}

DropoutMask sample_mask(std::size_t hidden_dim, double p_drop, CounterStream& stream) {
  validate_p_drop(p_drop);
  DropoutMask mask;
  mask.keep_prob = 1.0 - p_drop;
  mask.bits.resize(hidden_dim);
  for (auto& bit : mask.bits) {
    // uniform() < 1 always, so keep_prob = 1 yields an all-ones mask.
    bit = stream.uniform() < mask.keep_prob ? 1 : 0;
  }
  return mask;
}

HiddenState apply_dropout(const HiddenState& h, const DropoutMask& mask, double p_drop) {
  validate_p_drop(p_drop);
  if (h.size() != mask.bits.size()) {
    fail(ErrorKind::kInvalidInput, "dropout mask length does not match the hidden state");
  }
  const double keep = 1.0 - p_drop;
  std::vector<double> out(h.size());
  for (std::size_t j = 0; j < h.size(); ++j) {
    out[j] = mask.bits[j] != 0 ? h[j] / keep : 0.0;
  }
  return HiddenState(std::move(out));
}

LogitVector head_forward(const HeadWeights& weights, const HiddenState& h, ExecPolicy policy) {
  if (weights.hidden_dim() != h.size()) {
    fail(ErrorKind::kInvalidInput,
         "head expects hidden dim " + std::to_string(weights.hidden_dim()) + ", got " +
             std::to_string(h.size()));
  }
  std::vector<double> logits(weights.vocab_size());
  kernels::matvec(weights.matrix(), h.values(), logits, policy);
  return make_trusted_logits(std::move(logits));
}

std::vector<StreamKey> head_stream_keys(std::uint64_t seed, std::uint64_t position,
                                        std::size_t heads) {
  std::vector<StreamKey> keys(heads);
  for (std::size_t i = 0; i < heads; ++i) {
    keys[i] = StreamKey{seed, StreamDomain::kMask, position, i};
  }
  return keys;
}

HeadSampleSet mc_head_sample(const HeadWeights& weights, const HiddenState& h,
                             std::span<const StreamKey> streams, double p_drop,
                             ExecPolicy policy) {
  validate_p_drop(p_drop);
  if (streams.empty()) fail(ErrorKind::kInvalidInput, "mc_head_sample needs K >= 1 heads");
  if (weights.hidden_dim() != h.size()) {
    fail(ErrorKind::kInvalidInput, "hidden state does not match the head");
  }

  const std::size_t k = streams.size();
  HeadSampleSet out;
  out.p_drop = p_drop;
  out.logits.resize(k);
  out.dists.resize(k);
  out.argmax_tokens.resize(k);

  auto one_head = [&](std::size_t i) {
    CounterStream stream(streams[i]);
    const DropoutMask mask = sample_mask(h.size(), p_drop, stream);
    out.logits[i] = head_forward(weights, apply_dropout(h, mask, p_drop));
    out.dists[i] = softmax(out.logits[i]);
    out.argmax_tokens[i] = argmax(out.dists[i].probs());
  };

  if (policy == ExecPolicy::kParallel) {
    // Exceptions must not cross the parallel region boundary.
    std::exception_ptr error;
    const auto heads = static_cast<std::int64_t>(k);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < heads; ++i) {
      try {
        one_head(static_cast<std::size_t>(i));
      } catch (...) {
#pragma omp critical(dropmatch_head_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  } else {
    for (std::size_t i = 0; i < k; ++i) one_head(i);
  }

  out.deterministic_logits = head_forward(weights, h);
  out.deterministic_dist = softmax(out.deterministic_logits);
  return out;
}

}  // namespace dropmatch
