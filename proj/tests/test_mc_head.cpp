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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dropmatch/core_math.hpp"
#include "dropmatch/error.hpp"
#include "dropmatch/mc_head.hpp"
#include "gen.hpp"
#include "oracle.hpp"

namespace dropmatch {
namespace {

HeadWeights random_head(std::size_t v, std::size_t d, std::uint64_t seed) {
  gen::Gen g(seed);
  DenseMatrix w(v, d);
  for (auto& x : w.data()) x = g.normal(0.5);
  return HeadWeights(std::move(w));
}

// Probability of one specific mask under i.i.d. Bernoulli(keep) bits.
long double mask_weight(unsigned bits, std::size_t d, long double keep) {
  long double w = 1;
  for (std::size_t j = 0; j < d; ++j) w *= (bits >> j & 1u) ? keep : 1 - keep;
  return w;
}

DropoutMask mask_from_bits(unsigned bits, std::size_t d, double keep) {
  DropoutMask m;
  m.keep_prob = keep;
  for (std::size_t j = 0; j < d; ++j) m.bits.push_back(bits >> j & 1u);
  return m;
}

TEST(SampleMask, NoDropoutKeepsEverything) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CounterStream s(seed, StreamDomain::kMask, 0);
    const auto m = sample_mask(64, 0.0, s);
    for (auto b : m.bits) ASSERT_EQ(b, 1);
  }
}

TEST(SampleMask, KeepFractionConcentrates) {
  CounterStream s(123, StreamDomain::kMask, 0);
  const auto m = sample_mask(1000000, 0.3, s);
  double ones = 0;
  for (auto b : m.bits) ones += b;
  EXPECT_NEAR(ones / 1e6, 0.7, 0.005);
}

TEST(SampleMask, ResetStreamRepeats) {
  CounterStream a(77, StreamDomain::kMask, 0);
  CounterStream b(77, StreamDomain::kMask, 0);
  EXPECT_EQ(sample_mask(8, 0.3, a).bits, sample_mask(8, 0.3, b).bits);
}

TEST(SampleMask, RejectsPDropOfOne) {
  CounterStream s(0, StreamDomain::kMask, 0);
  try {
    sample_mask(4, 1.0, s);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidConfig);
  }
  EXPECT_THROW(sample_mask(4, -0.1, s), Error);
}

TEST(ApplyDropout, IdentityAtZero) {
  HiddenState h({1.5, -2.0, 0.25});
  EXPECT_EQ(apply_dropout(h, mask_from_bits(0b111, 3, 1.0), 0.0), h);
}

TEST(ApplyDropout, HandExample) {
  const auto out = apply_dropout(HiddenState({2, 4}), mask_from_bits(0b01, 2, 0.5), 0.5);
  EXPECT_EQ(out, HiddenState({4, 0}));
}

TEST(ApplyDropout, LengthMismatch) {
  EXPECT_THROW(apply_dropout(HiddenState({1, 2}), mask_from_bits(1, 3, 0.5), 0.5), Error);
}

TEST(ApplyDropout, ExhaustiveExpectationSmall) {
  const std::size_t d = 4;
  const double p = 0.25;
  HiddenState h({0.3, -1.7, 2.2, 5.0});
  std::vector<long double> mean(d, 0);
  for (unsigned bits = 0; bits < (1u << d); ++bits) {
    const auto out = apply_dropout(h, mask_from_bits(bits, d, 1 - p), p);
    const auto w = mask_weight(bits, d, 1 - static_cast<long double>(p));
    for (std::size_t j = 0; j < d; ++j) mean[j] += w * out[j];
  }
  for (std::size_t j = 0; j < d; ++j) EXPECT_NEAR(static_cast<double>(mean[j]), h[j], 1e-12);
}

TEST(HeadForward, IdentityWeights) {
  DenseMatrix eye(3, 3);
  for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1;
  EXPECT_EQ(head_forward(HeadWeights(eye), HiddenState({1, 2, 3})).vec(),
            (std::vector<double>{1, 2, 3}));
}

TEST(HeadForward, HandMatvec) {
  HeadWeights w(DenseMatrix(3, 2, {1, 0, 0, 1, 1, 1}));
  EXPECT_EQ(head_forward(w, HiddenState({2, 3})).vec(), (std::vector<double>{2, 3, 5}));
}

TEST(HeadForward, MatchesDoubleLoop) {
  const auto w = random_head(32, 16, 4);
  gen::Gen g(5);
  const auto hv = g.logits(16, 1.0);
  const auto got = head_forward(w, HiddenState(hv));
  const auto want = oracle::matvec(w.matrix(), std::vector<oracle::Real>(hv.begin(), hv.end()));
  for (std::size_t r = 0; r < 32; ++r) {
    EXPECT_NEAR(got[r], static_cast<double>(want[r]), 1e-10 * std::max(1.0, std::abs(got[r])));
  }
}

TEST(HeadForward, ShapeMismatch) {
  EXPECT_THROW(head_forward(random_head(8, 4, 1), HiddenState({1, 2, 3})), Error);
}

TEST(McHeadSample, NoDropoutCollapsesToDeterministic) {
  const auto w = random_head(50, 12, 6);
  gen::Gen g(6);
  HiddenState h(g.logits(12, 1.0));
  for (std::size_t k : {1u, 3u, 8u}) {
    const auto keys = head_stream_keys(9, 2, k);
    const auto s = mc_head_sample(w, h, keys, 0.0);
    ASSERT_EQ(s.heads(), k);
    for (std::size_t i = 0; i < k; ++i) {
      ASSERT_EQ(s.logits[i], s.deterministic_logits);
      ASSERT_EQ(s.dists[i], s.deterministic_dist);
    }
  }
}

TEST(McHeadSample, SingleHeadIsComposition) {
  const auto w = random_head(40, 10, 7);
  gen::Gen g(7);
  HiddenState h(g.logits(10, 1.0));
  const StreamKey key{31, StreamDomain::kMask, 4, 0};
  const auto s = mc_head_sample(w, h, std::span(&key, 1), 0.3);
  CounterStream stream(key);
  const auto manual = head_forward(w, apply_dropout(h, sample_mask(10, 0.3, stream), 0.3));
  EXPECT_EQ(s.logits[0], manual);
  EXPECT_EQ(s.dists[0], softmax(manual));
}

TEST(McHeadSample, ArgmaxMatchesScalarReference) {
  const auto w = random_head(64, 16, 8);
  gen::Gen g(8);
  for (std::uint64_t pos = 0; pos < 50; ++pos) {
    const auto hv = g.logits(16, 1.0);
    const auto s = mc_head_sample(w, HiddenState(hv), head_stream_keys(5, pos, 5), 0.3);
    const auto ref = oracle::sample_heads(w.matrix(), hv, 5, pos, 5, 0.3);
    for (std::size_t i = 0; i < 5; ++i) {
      ASSERT_EQ(s.argmax_tokens[i], ref.tokens[i]) << "pos " << pos << " head " << i;
      for (std::size_t t = 0; t < 64; ++t) {
        ASSERT_NEAR(s.dists[i][t], static_cast<double>(ref.probs[i][t]), 1e-12);
      }
    }
  }
}

TEST(McHeadSample, RejectsEmptyAndBadPDrop) {
  const auto w = random_head(4, 2, 1);
  HiddenState h({1, 1});
  EXPECT_THROW(mc_head_sample(w, h, {}, 0.3), Error);
  const auto keys = head_stream_keys(0, 0, 2);
  EXPECT_THROW(mc_head_sample(w, h, keys, 1.0), Error);
}

// --- properties -------------------------------------------------------------

TEST(McHeadProperty, ExhaustiveExpectation) {
  gen::Gen g(20);
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t d = 6 + g.index(7);  // up to 12
    const double p = g.uniform(0.0, 0.9);
    HiddenState h(g.logits(d, 2.0));
    std::vector<long double> mean(d, 0);
    for (unsigned bits = 0; bits < (1u << d); ++bits) {
      const auto out = apply_dropout(h, mask_from_bits(bits, d, 1 - p), p);
      const auto w = mask_weight(bits, d, 1 - static_cast<long double>(p));
      for (std::size_t j = 0; j < d; ++j) mean[j] += w * out[j];
    }
    for (std::size_t j = 0; j < d; ++j) {
      ASSERT_LT(std::abs(static_cast<double>(mean[j]) - h[j]), 1e-10) << "d=" << d << " p=" << p;
    }
  }
}

TEST(McHeadProperty, MonteCarloExpectation) {
  const std::size_t d = 10;
  const double p = 0.25;
  const std::size_t n = 100000;
  HiddenState h({1.0, -2.0, 0.5, 3.0, -0.25, 0.0, 4.5, -1.0, 2.0, 0.75});
  std::vector<double> sum(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    CounterStream s(99, StreamDomain::kMask, i);
    const auto out = apply_dropout(h, sample_mask(d, p, s), p);
    for (std::size_t j = 0; j < d; ++j) sum[j] += out[j];
  }
  for (std::size_t j = 0; j < d; ++j) {
    // Var[h m / (1-p)] = h^2 p / (1-p)
    const double sigma = std::abs(h[j]) * std::sqrt(p / (1 - p));
    EXPECT_LE(std::abs(sum[j] / n - h[j]), 5 * sigma / std::sqrt(static_cast<double>(n)) + 1e-15);
  }
}

TEST(McHeadProperty, ParallelMatchesSerialBitForBit) {
  const auto w = random_head(256, 64, 21);
  gen::Gen g(21);
  for (int trial = 0; trial < 10; ++trial) {
    HiddenState h(g.logits(64, 1.0));
    const auto keys = head_stream_keys(trial, trial * 3, 1 + g.index(8));
    const auto serial = mc_head_sample(w, h, keys, 0.3, ExecPolicy::kSerial);
    for (int threads : {1, 4}) {
      kernels::set_thread_count(threads);
      const auto par = mc_head_sample(w, h, keys, 0.3, ExecPolicy::kParallel);
      ASSERT_EQ(par.logits, serial.logits);
      ASSERT_EQ(par.dists, serial.dists);
      ASSERT_EQ(par.argmax_tokens, serial.argmax_tokens);
      ASSERT_EQ(par.deterministic_dist, serial.deterministic_dist);
    }
  }
  kernels::set_thread_count(0);
}

TEST(McHeadProperty, HeadOrderIndependent) {
  // Evaluating heads in a different order (reversed keys) yields the same
  // per-key results.
  const auto w = random_head(32, 8, 22);
  HiddenState h({0.1, 0.2, -0.3, 0.4, 0.5, -0.6, 0.7, 0.8});
  auto keys = head_stream_keys(1, 1, 6);
  const auto fwd = mc_head_sample(w, h, keys, 0.4);
  std::reverse(keys.begin(), keys.end());
  const auto rev = mc_head_sample(w, h, keys, 0.4);
  for (std::size_t i = 0; i < 6; ++i) ASSERT_EQ(fwd.logits[i], rev.logits[5 - i]);
}

TEST(McHeadProperty, LinearityCommutation) {
  gen::Gen g(23);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t v = 8 + g.index(60);
    const std::size_t d = 4 + g.index(30);
    const std::size_t k = 1 + g.index(8);
    const double p = g.uniform(0.0, 0.8);
    const auto w = random_head(v, d, 100 + trial);
    HiddenState h(g.logits(d, 1.0));
    const auto keys = head_stream_keys(trial, 0, k);
    const auto s = mc_head_sample(w, h, keys, p);
    const auto mean = mean_logits(s.logits);

    std::vector<double> mean_h(d, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      CounterStream stream(keys[i]);
      const auto masked = apply_dropout(h, sample_mask(d, p, stream), p);
      for (std::size_t j = 0; j < d; ++j) mean_h[j] += masked[j] / static_cast<double>(k);
    }
    const auto direct = head_forward(w, HiddenState(mean_h));
    for (std::size_t t = 0; t < v; ++t) ASSERT_NEAR(mean[t], direct[t], 1e-10);
  }
}

}  // namespace
}  // namespace dropmatch
