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

#include <vector>

#include "dropmatch/core_math.hpp"
#include "dropmatch/mc_head.hpp"

namespace fixture {

// A HeadSampleSet assembled from explicit per-head logits. The
// "deterministic" member is taken to be the first head.
inline dropmatch::HeadSampleSet samples_from_logits(const std::vector<std::vector<double>>& logits) {
  dropmatch::HeadSampleSet s;
  for (const auto& l : logits) {
    s.logits.emplace_back(l);
    s.dists.push_back(dropmatch::softmax(s.logits.back()));
    s.argmax_tokens.push_back(dropmatch::argmax(l));
  }
  s.deterministic_logits = s.logits.front();
  s.deterministic_dist = s.dists.front();
  return s;
}

// Heads whose argmax tokens are exactly `tokens`, each a peaked logit
// vector over a vocabulary of size v.
inline dropmatch::HeadSampleSet samples_with_tokens(const std::vector<dropmatch::TokenId>& tokens,
                                                    std::size_t v, double peak = 4.0) {
  std::vector<std::vector<double>> logits;
  for (auto t : tokens) {
    std::vector<double> l(v, 0.0);
    l[t] = peak;
    logits.push_back(l);
  }
  return samples_from_logits(logits);
}

}  // namespace fixture
