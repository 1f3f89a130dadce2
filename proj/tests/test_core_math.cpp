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
#include <limits>
#include <numbers>
#include <vector>

#include "dropmatch/core_math.hpp"
#include "dropmatch/error.hpp"
#include "gen.hpp"
#include "oracle.hpp"

namespace dropmatch {
namespace {

constexpr double kLn2 = std::numbers::ln2;

ProbDist dist(std::vector<double> p) { return ProbDist::validated(std::move(p)); }

TEST(Softmax, UniformLogits) {
  auto p = softmax(LogitVector({0, 0, 0, 0}));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(p[i], 0.25);
}

TEST(Softmax, ShiftedLogRatio) {
  for (double c : {-50.0, 0.0, 3.5, 700.0}) {
    auto p = softmax(LogitVector({c, c + std::log(3.0)}));
    EXPECT_NEAR(p[0], 0.25, 1e-12) << c;
    EXPECT_NEAR(p[1], 0.75, 1e-12) << c;
  }
}

TEST(Softmax, MatchesExtendedPrecision) {
  const std::vector<double> l{1.0, 2.0, 3.0};
  const auto want = oracle::softmax(l);
  const auto got = softmax(LogitVector(l));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(got[i], static_cast<double>(want[i]), 1e-12);
}

TEST(Softmax, RejectsNonFiniteAndTooShort) {
  EXPECT_THROW(LogitVector({0.0, std::numeric_limits<double>::quiet_NaN()}), Error);
  EXPECT_THROW(LogitVector({std::numeric_limits<double>::infinity(), 0.0}), Error);
  EXPECT_THROW(softmax(LogitVector({1.0})), Error);
  try {
    LogitVector({0.0, std::numeric_limits<double>::quiet_NaN()});
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidInput);
  }
}

TEST(Softmax, HugeLogitsStayFinite) {
  auto p = softmax(LogitVector({1e300, 1e300 - 1e290, -1e300}));
  EXPECT_TRUE(std::isfinite(p[0]));
  EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-12);
}

TEST(Kl, Identity) {
  gen::Gen g(1);
  for (int i = 0; i < 20; ++i) {
    auto p = g.prob_dist(17);
    EXPECT_NEAR(kl_divergence(p, p), 0.0, 1e-15);
  }
}

TEST(Kl, TwoTermHandSum) {
  const double want = 0.5 * std::log(0.5 / 0.25) + 0.5 * std::log(0.5 / 0.75);
  EXPECT_NEAR(kl_divergence(dist({0.5, 0.5}), dist({0.25, 0.75})), want, 1e-15);
}

TEST(Kl, SingleSurvivingTerm) {
  EXPECT_NEAR(kl_divergence(dist({1, 0}), dist({0.5, 0.5})), kLn2, 1e-15);
}

TEST(Kl, ZeroDivisorIsFloored) {
  const double v = kl_divergence(dist({0.5, 0.5}), dist({1, 0}));
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, 0.5 * std::log(0.5) + 0.5 * std::log(0.5 / kProbFloor), 1e-9);
}

TEST(Kl, LengthMismatch) {
  EXPECT_THROW(kl_divergence(dist({0.5, 0.5}), dist({0.2, 0.3, 0.5})), Error);
}

TEST(Js, Identity) {
  auto p = dist({0.1, 0.2, 0.7});
  EXPECT_EQ(js_divergence(p, p), 0.0);
}

TEST(Js, DisjointSupport) {
  EXPECT_NEAR(js_divergence(dist({1, 0}), dist({0, 1})), kLn2, 1e-15);
}

TEST(Js, MatchesExtendedPrecision) {
  const std::vector<double> p{0.5, 0.5};
  const std::vector<double> q{0.25, 0.75};
  EXPECT_NEAR(js_divergence(dist(p), dist(q)), static_cast<double>(oracle::js(p, q)), 1e-12);
}

TEST(Js, LengthMismatch) {
  EXPECT_THROW(js_divergence(dist({0.5, 0.5}), dist({0.2, 0.3, 0.5})), Error);
}

TEST(MeanLogits, SingleElement) {
  std::vector<LogitVector> set{LogitVector({1.5, -2.0})};
  EXPECT_EQ(mean_logits(set).vec(), (std::vector<double>{1.5, -2.0}));
}

TEST(MeanLogits, SymmetricPair) {
  std::vector<LogitVector> set{LogitVector({0, 2}), LogitVector({2, 0})};
  EXPECT_EQ(mean_logits(set).vec(), (std::vector<double>{1, 1}));
}

TEST(MeanLogits, MatchesCoordinateLoop) {
  gen::Gen g(7);
  std::vector<LogitVector> set;
  for (int k = 0; k < 5; ++k) set.emplace_back(g.logits(64));
  const auto got = mean_logits(set);
  for (std::size_t j = 0; j < 64; ++j) {
    long double s = 0;
    for (const auto& l : set) s += l[j];
    EXPECT_NEAR(got[j], static_cast<double>(s / 5), 1e-12);
  }
}

TEST(MeanLogits, EmptySet) {
  std::vector<LogitVector> none;
  EXPECT_THROW(mean_logits(none), Error);
}

TEST(ProbDist, ValidationBounds) {
  EXPECT_THROW(ProbDist::validated({0.5, 0.4}), Error);
  EXPECT_THROW(ProbDist::validated({1.5, -0.5}), Error);
  EXPECT_NO_THROW(ProbDist::validated({0.5, 0.5 + 1e-10}));
}

TEST(StableSum, CancelsRoundoff) {
  std::vector<double> xs{1.0, 1e100, 1.0, -1e100};
  EXPECT_EQ(stable_sum(xs), 2.0);
}

TEST(Argmax, FirstMaximum) {
  std::vector<double> xs{1, 3, 3, 2};
  EXPECT_EQ(argmax(xs), 1u);
}

// --- properties -------------------------------------------------------------

TEST(CoreMathProperty, SoftmaxShiftInvariance) {
  gen::Gen g(11);
  for (int trial = 0; trial < 500; ++trial) {
    const auto v = 2 + g.index(300);
    auto l = g.logits(v, g.uniform(0.1, 20.0));
    const double c = g.normal(100.0);
    auto shifted = l;
    for (auto& x : shifted) x += c;
    const auto a = softmax(LogitVector(l));
    const auto b = softmax(LogitVector(shifted));
    for (std::size_t i = 0; i < v; ++i) ASSERT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(CoreMathProperty, SoftmaxNormalizedAndArgmaxPreserving) {
  gen::Gen g(12);
  for (int trial = 0; trial < 500; ++trial) {
    const auto l = g.logits(2 + g.index(500), g.uniform(0.1, 30.0));
    const auto p = softmax(LogitVector(l));
    ASSERT_NEAR(stable_sum(p.probs()), 1.0, 1e-12);
    ASSERT_EQ(argmax(p.probs()), argmax(l));
  }
}

TEST(CoreMathProperty, SoftmaxLargeVocabulary) {
  gen::Gen g(13);
  const auto l = g.logits(1 << 16, 1.0);
  const auto p = softmax(LogitVector(l));
  const auto want = oracle::softmax(l);
  oracle::Real total = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    total += p[i];
    ASSERT_NEAR(p[i], static_cast<double>(want[i]), 1e-15);
  }
  EXPECT_NEAR(static_cast<double>(total), 1.0, 1e-12);
}

TEST(CoreMathProperty, KlNonNegativeZeroOnlyWhenEqual) {
  gen::Gen g(14);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto v = 2 + g.index(64);
    const auto p = g.prob_dist(v);
    const auto q = g.coin(0.1) ? p : g.prob_dist(v);
    const double d = kl_divergence(p, q);
    ASSERT_GE(d, 0.0);
    if (p == q) {
      ASSERT_NEAR(d, 0.0, 1e-12);
    } else {
      ASSERT_GT(d, 1e-12);
    }
  }
}

TEST(CoreMathProperty, JsSymmetricBoundedAgreesWithOracle) {
  gen::Gen g(15);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto v = 2 + g.index(256);
    const auto p = g.dist(v);
    const auto q = g.dist(v);
    const double pq = js_divergence(p, q);
    const double qp = js_divergence(q, p);
    ASSERT_LT(std::abs(pq - qp), 1e-12);
    ASSERT_GE(pq, 0.0);
    ASSERT_LE(pq, kLn2 + 1e-12);
    ASSERT_NEAR(pq, static_cast<double>(oracle::js(p, q)), 1e-12);
  }
}

}  // namespace
}  // namespace dropmatch
