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

#include "dropmatch/kernels.hpp"

#include <cstdint>

#include "dropmatch/error.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace dropmatch {

namespace {
// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWorkThreshold = 1 << 14;
}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    fail(ErrorKind::kInvalidInput, "matrix data does not match its shape");
  }
}

namespace kernels {

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) acc += a[j] * b[j];
  return acc;
}

void matvec_serial(const DenseMatrix& a, std::span<const double> x, std::span<double> y) noexcept {
  for (std::size_t r = 0; r < a.rows(); ++r) y[r] = dot(a.row(r), x);
}

void matvec_parallel(const DenseMatrix& a, std::span<const double> x, std::span<double> y) noexcept {
  const auto rows = static_cast<std::int64_t>(a.rows());
  [[maybe_unused]] const bool big = a.rows() * a.cols() >= kParallelWorkThreshold;
#pragma omp parallel for schedule(static) if (big)
  for (std::int64_t r = 0; r < rows; ++r) {
    y[static_cast<std::size_t>(r)] = dot(a.row(static_cast<std::size_t>(r)), x);
  }
}

void set_thread_count(int n) {
#if defined(_OPENMP)
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace kernels
}  // namespace dropmatch
