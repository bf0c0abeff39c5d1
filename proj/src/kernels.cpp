// Copyright 2026 The ATS Authors
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

#include "ats/kernels.hpp"

#include <cstdint>

#include "ats/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ats::kernels {
namespace {

// Below this many multiply-adds the fork/join cost dominates.
constexpr std::size_t kParallelWork = 1u << 15;

void check(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) {
    throw ShapeError(std::string(op) + ": dimension mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

// Row kernels shared by both builds; each writes one output row.

inline void row_ab(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  const std::size_t inner = a.cols();
  const std::size_t n = b.cols();
  double* o = out.data() + i * n;
  const double* ar = a.data() + i * inner;
  for (std::size_t k = 0; k < inner; ++k) {
    const double aik = ar[k];
    const double* br = b.data() + k * n;
    for (std::size_t j = 0; j < n; ++j) o[j] += aik * br[j];
  }
}

// Output row i of a^T b is sum_k a(k,i) * b.row(k).
inline void row_atb(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  const std::size_t n = b.cols();
  double* o = out.data() + i * n;
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double aki = a(k, i);
    if (aki == 0.0) continue;
    const double* br = b.data() + k * n;
    for (std::size_t j = 0; j < n; ++j) o[j] += aki * br[j];
  }
}

}  // namespace

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  check(a.cols() == b.rows(), "matmul", a, b);
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) row_ab(a, b, out, i);
  return out;
}

// a b^T is computed as a (b^T) so the inner loop runs over contiguous output
// entries; each entry still accumulates in ascending k.
Matrix matmul_abt(const Matrix& a, const Matrix& b) {
  check(a.cols() == b.cols(), "matmul_abt", a, b);
  const Matrix bt = b.transposed();
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) row_ab(a, bt, out, i);
  return out;
}

Matrix matmul_atb(const Matrix& a, const Matrix& b) {
  check(a.rows() == b.rows(), "matmul_atb", a, b);
  Matrix out(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) row_atb(a, b, out, i);
  return out;
}

}  // namespace serial

namespace parallel {

Matrix matmul(const Matrix& a, const Matrix& b) {
  check(a.cols() == b.rows(), "matmul", a, b);
  Matrix out(a.rows(), b.cols());
  const auto rows = static_cast<std::int64_t>(a.rows());
  const bool big = a.rows() * a.cols() * b.cols() >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::int64_t i = 0; i < rows; ++i) row_ab(a, b, out, static_cast<std::size_t>(i));
  return out;
}

Matrix matmul_abt(const Matrix& a, const Matrix& b) {
  check(a.cols() == b.cols(), "matmul_abt", a, b);
  const Matrix bt = b.transposed();
  Matrix out(a.rows(), b.rows());
  const auto rows = static_cast<std::int64_t>(a.rows());
  const bool big = a.rows() * a.cols() * b.rows() >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::int64_t i = 0; i < rows; ++i) row_ab(a, bt, out, static_cast<std::size_t>(i));
  return out;
}

Matrix matmul_atb(const Matrix& a, const Matrix& b) {
  check(a.rows() == b.rows(), "matmul_atb", a, b);
  Matrix out(a.cols(), b.cols());
  const auto rows = static_cast<std::int64_t>(a.cols());
  const bool big = a.rows() * a.cols() * b.cols() >= kParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::int64_t i = 0; i < rows; ++i) row_atb(a, b, out, static_cast<std::size_t>(i));
  return out;
}

}  // namespace parallel

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace ats::kernels
