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
#include <span>
#include <vector>

namespace dropmatch {

/// Serial is the reference path; Parallel distributes independent rows or
/// heads over OpenMP threads. Both produce bit-identical results because
/// every dot product is still accumulated in one fixed order.
enum class ExecPolicy { kSerial, kParallel };

/// Row-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace kernels {

double dot(std::span<const double> a, std::span<const double> b) noexcept;

// y = A x. Shapes are the caller's responsibility.
void matvec_serial(const DenseMatrix& a, std::span<const double> x, std::span<double> y) noexcept;
void matvec_parallel(const DenseMatrix& a, std::span<const double> x, std::span<double> y) noexcept;

inline void matvec(const DenseMatrix& a, std::span<const double> x, std::span<double> y,
                   ExecPolicy policy) noexcept {
  if (policy == ExecPolicy::kParallel) {
    matvec_parallel(a, x, y);
  } else {
    matvec_serial(a, x, y);
  }
}

/// Sets the OpenMP thread count used by the parallel kernels (no-op if
/// OpenMP is unavailable). n = 0 leaves the runtime default.
void set_thread_count(int n);
int max_threads();

}  // namespace kernels
}  // namespace dropmatch
