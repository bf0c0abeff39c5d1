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

#pragma once

#include "ats/matrix.hpp"

// Dense product kernels in two builds: a plain serial reference and an
// OpenMP build that splits output rows across threads. Every output entry is
// accumulated in ascending inner-index order in both builds, so the results
// are bitwise identical regardless of thread count.

namespace ats::kernels {

namespace serial {
Matrix matmul(const Matrix& a, const Matrix& b);      // a * b
Matrix matmul_abt(const Matrix& a, const Matrix& b);  // a * b^T
Matrix matmul_atb(const Matrix& a, const Matrix& b);  // a^T * b
}  // namespace serial

namespace parallel {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_abt(const Matrix& a, const Matrix& b);
Matrix matmul_atb(const Matrix& a, const Matrix& b);
}  // namespace parallel

// Number of threads the parallel build will use (1 without OpenMP).
int max_threads();

}  // namespace ats::kernels

namespace ats {

// Library-facing entry points; dispatch to the parallel build.
inline Matrix matmul(const Matrix& a, const Matrix& b) { return kernels::parallel::matmul(a, b); }
inline Matrix matmul_abt(const Matrix& a, const Matrix& b) {
  return kernels::parallel::matmul_abt(a, b);
}
inline Matrix matmul_atb(const Matrix& a, const Matrix& b) {
  return kernels::parallel::matmul_atb(a, b);
}

}  // namespace ats
