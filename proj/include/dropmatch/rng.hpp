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

#include <cstdint>
#include <limits>

namespace dropmatch {

// What a random stream is used for. Part of the stream key so that, e.g.,
// mask bits and draft sampling never share numbers.
enum class StreamDomain : std::uint64_t {
  kMask = 1,
  kDraftSample = 2,
  kLossless = 3,
  kBonus = 4,
  kParams = 5,
  kPerturb = 6,
  kPrompt = 7,
  kTableInit = 8,
};

struct StreamKey {
  std::uint64_t seed = 0;
  StreamDomain domain = StreamDomain::kMask;
  std::uint64_t index = 0;
  std::uint64_t sub = 0;
};

// Counter-based random stream: the n-th draw is a pure function of
// (key, n), so results never depend on which thread evaluates what or in
// which order streams are consumed.
class CounterStream {
 public:
  using result_type = std::uint64_t;

  explicit CounterStream(const StreamKey& key) noexcept;
  CounterStream(std::uint64_t seed, StreamDomain domain, std::uint64_t index,
                std::uint64_t sub = 0) noexcept
      : CounterStream(StreamKey{seed, domain, index, sub}) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept;

  /// Standard normal via Box-Muller; consumes two draws per call.
  double normal() noexcept;

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace dropmatch
