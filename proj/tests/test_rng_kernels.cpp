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

#include <cmath>
#include <set>
#include <vector>

#include "dropmatch/kernels.hpp"
#include "dropmatch/rng.hpp"
#include "gen.hpp"
#include "oracle.hpp"

namespace dropmatch {
namespace {

TEST(CounterStream, SameKeySameSequence) {
  CounterStream a(42, StreamDomain::kMask, 7, 3);
  CounterStream b(42, StreamDomain::kMask, 7, 3);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a(), b());
}

TEST(CounterStream, KeyFieldsSeparateStreams) {
  std::set<std::uint64_t> firsts;
  for (auto d : {StreamDomain::kMask, StreamDomain::kLossless}) {
    for (std::uint64_t seed : {0u, 1u}) {
      for (std::uint64_t index : {0u, 1u}) {
        for (std::uint64_t sub : {0u, 1u}) firsts.insert(CounterStream(seed, d, index, sub)());
      }
    }
  }
  EXPECT_EQ(firsts.size(), 16u);
}

TEST(CounterStream, UniformMoments) {
  CounterStream s(9, StreamDomain::kDraftSample, 0);
  const int n = 200000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 5 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12, 0.002);
}

TEST(CounterStream, NormalMoments) {
  CounterStream s(3, StreamDomain::kParams, 0);
  const int n = 100000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(CounterStream, BelowStaysInRange) {
  CounterStream s(5, StreamDomain::kPrompt, 0);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto k = s.below(7);
    ASSERT_LT(k, 7u);
    ++hits[k];
  }
  for (int h : hits) EXPECT_NEAR(h, 10000, 500);
}

TEST(Kernels, MatvecMatchesDoubleLoop) {
  gen::Gen g(1);
  DenseMatrix a(32, 16);
  for (auto& x : a.data()) x = g.normal();
  const auto x = g.logits(16, 1.0);
  std::vector<double> y(32);
  kernels::matvec_serial(a, x, y);
  const auto want = oracle::matvec(a, std::vector<oracle::Real>(x.begin(), x.end()));
  for (std::size_t r = 0; r < 32; ++r) {
    EXPECT_NEAR(y[r], static_cast<double>(want[r]), 1e-10 * (1 + std::abs(y[r])));
  }
}

TEST(Kernels, ParallelBitIdenticalToSerial) {
  gen::Gen g(2);
  for (auto [rows, cols] : {std::pair{3, 5}, {256, 64}, {1024, 64}, {4096, 33}}) {
    DenseMatrix a(rows, cols);
    for (auto& x : a.data()) x = g.normal();
    const auto x = g.logits(cols, 1.0);
    std::vector<double> serial(rows);
    kernels::matvec_serial(a, x, serial);
    for (int threads : {1, 2, 4}) {
      kernels::set_thread_count(threads);
      std::vector<double> par(rows);
      kernels::matvec_parallel(a, x, par);
      ASSERT_EQ(par, serial) << rows << "x" << cols << " threads=" << threads;
    }
  }
  kernels::set_thread_count(0);
}

TEST(Kernels, DotOfOrthogonal) {
  std::vector<double> a{1, 0, 2};
  std::vector<double> b{0, 5, 0};
  EXPECT_EQ(kernels::dot(a, b), 0.0);
}

}  // namespace
}  // namespace dropmatch
