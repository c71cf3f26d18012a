/*
 * Copyright 2026 meda-lab Contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstddef>
#include <string>

// Dense double-precision inner loops behind the training engine.
// Scalar reference kernels always exist; an AVX2+FMA variant is selected
// at runtime when the CPU supports it. The two variants are
// equivalence-tested against each other; a run always uses one fixed
// backend so results stay deterministic on a given machine.

namespace medalab::kernels {

enum class Backend { scalar, avx2 };

// Table of function pointers for one backend.
struct Kernels {
    // sum_i x[i] * y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    // y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // x[i] *= a
    void (*scale)(double a, double* x, std::size_t n);
    // y = W x + b, W row-major m x n
    void (*gemv)(const double* w, const double* x, const double* b, double* y,
                 std::size_t m, std::size_t n);
    // gx[j] += sum_i W[i][j] * gy[i]  (W^T gy accumulate)
    void (*gemv_t_acc)(const double* w, const double* gy, double* gx,
                       std::size_t m, std::size_t n);
    // gw[i][j] += gy[i] * x[j]  (rank-1 accumulate)
    void (*ger_acc)(const double* gy, const double* x, double* gw,
                    std::size_t m, std::size_t n);
    // One bias-corrected Adam step over a contiguous span.
    // p -= lr * (m/bc1) / (sqrt(v/bc2) + eps) with
    // m = b1*m + (1-b1)*g, v = b2*v + (1-b2)*g^2,
    // bc1 = 1-b1^t, bc2 = 1-b2^t.
    void (*adam_step)(double* p, double* m, double* v, const double* g,
                      std::size_t n, double lr, double beta1, double beta2,
                      double eps, double bc1, double bc2);
};

// The backend in use for this process. Chosen once: AVX2 when the CPU
// supports it, overridable via the MEDALAB_KERNELS env var
// ("scalar" | "avx2").
const Kernels& active();
Backend active_backend();
std::string backend_name();

// Explicit tables, used by the equivalence tests.
const Kernels& scalar_kernels();
const Kernels* avx2_kernels();  // nullptr when unsupported at runtime

}  // namespace medalab::kernels
