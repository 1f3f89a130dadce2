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

#include "dropmatch/rng.hpp"

#include <cmath>
#include <numbers>

namespace dropmatch {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

CounterStream::CounterStream(const StreamKey& key) noexcept {
  std::uint64_t h = mix64(key.seed + kGolden);
  h = mix64(h ^ (static_cast<std::uint64_t>(key.domain) * kGolden));
  h = mix64(h ^ (key.index + 0x632be59bd9b4e019ULL));
  h = mix64(h ^ (key.sub + 0x85157af5ULL));
  base_ = h;
}

CounterStream::result_type CounterStream::operator()() noexcept {
  ++counter_;
  return mix64(base_ + counter_ * kGolden);
}

double CounterStream::uniform() noexcept {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double CounterStream::normal() noexcept {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t CounterStream::below(std::uint64_t n) noexcept {
  const auto k = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
  return k < n ? k : n - 1;
}

}  // namespace dropmatch
