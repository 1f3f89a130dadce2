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

// Independent reference evaluations used as test oracles. Everything here is
// written as plain scalar loops in long double and shares nothing with the
// library except the random stream definition (so seeds line up).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "dropmatch/kernels.hpp"
#include "dropmatch/rng.hpp"

namespace oracle {

using Real = long double;

inline std::vector<Real> softmax(const std::vector<double>& logits) {
  Real top = logits[0];
  for (double l : logits) top = std::max<Real>(top, l);
  std::vector<Real> out(logits.size());
  Real total = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(static_cast<Real>(logits[i]) - top);
    total += out[i];
  }
  for (auto& p : out) p /= total;
  return out;
}

template <typename P, typename Q>
Real kl(const P& p, const Q& q) {
  Real acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Real pi = p[i];
    if (pi <= 0) continue;
    const Real qi = std::max<Real>(q[i], 1e-12L);
    acc += pi * std::log(pi / qi);
  }
  return acc;
}

template <typename P, typename Q>
Real js(const P& p, const Q& q) {
  std::vector<Real> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = (static_cast<Real>(p[i]) + q[i]) / 2;
  return kl(p, m) / 2 + kl(q, m) / 2;
}

inline std::vector<Real> matvec(const dropmatch::DenseMatrix& a, const std::vector<Real>& x) {
  std::vector<Real> y(a.rows(), 0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) y[r] += static_cast<Real>(a(r, c)) * x[c];
  }
  return y;
}

template <typename V>
std::size_t argmax(const V& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

struct Heads {
  std::vector<std::vector<Real>> logits;
  std::vector<std::vector<Real>> probs;
  std::vector<std::size_t> tokens;
  std::vector<Real> deterministic;
};

// Masks are regenerated from the same keyed streams the library uses.
inline Heads sample_heads(const dropmatch::DenseMatrix& w, const std::vector<double>& h,
                          std::uint64_t seed, std::uint64_t position, std::size_t k,
                          double p_drop) {
  Heads out;
  for (std::size_t i = 0; i < k; ++i) {
    dropmatch::CounterStream stream(seed, dropmatch::StreamDomain::kMask, position, i);
    std::vector<Real> masked(h.size());
    for (std::size_t j = 0; j < h.size(); ++j) {
      const bool keep = stream.uniform() < 1.0 - p_drop;
      masked[j] = keep ? static_cast<Real>(h[j]) / (1.0L - p_drop) : 0;
    }
    out.logits.push_back(matvec(w, masked));
    std::vector<double> as_double(out.logits.back().begin(), out.logits.back().end());
    out.probs.push_back(softmax(as_double));
    out.tokens.push_back(argmax(out.logits.back()));
  }
  std::vector<Real> plain(h.begin(), h.end());
  const auto det = matvec(w, plain);
  out.deterministic = softmax(std::vector<double>(det.begin(), det.end()));
  return out;
}

enum class Verdict { kJs, kMajority, kReject };

// Centroid from mean logits, JS test against the farthest head, then the
// unique-plurality fallback.
inline Verdict dropmatch(const Heads& heads, const std::vector<double>& draft_probs,
                         std::size_t draft_token) {
  const std::size_t v = heads.logits[0].size();
  std::vector<double> mean(v, 0.0);
  for (std::size_t j = 0; j < v; ++j) {
    Real s = 0;
    for (const auto& l : heads.logits) s += l[j];
    mean[j] = static_cast<double>(s / heads.logits.size());
  }
  const auto center = softmax(mean);
  Real worst = 0;
  for (const auto& p : heads.probs) worst = std::max(worst, js(p, center));
  if (js(draft_probs, center) <= worst) return Verdict::kJs;

  std::map<std::size_t, std::size_t> counts;
  for (auto t : heads.tokens) ++counts[t];
  std::size_t best_count = 0;
  std::size_t ties = 0;
  std::size_t best = 0;
  for (auto [t, c] : counts) {
    if (c > best_count) {
      best_count = c;
      best = t;
      ties = 1;
    } else if (c == best_count) {
      ++ties;
    }
  }
  if (ties == 1 && best == draft_token) return Verdict::kMajority;
  return Verdict::kReject;
}

}  // namespace oracle
