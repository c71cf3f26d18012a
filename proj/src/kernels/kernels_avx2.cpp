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
#include "medalab/kernels/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define MEDALAB_HAVE_AVX2_TU 1
#include <immintrin.h>

#include <cmath>
#include <cstddef>
#endif

// AVX2+FMA variants of the reference kernels. This TU is compiled with
// -mavx2 -mfma; nothing here runs unless the runtime CPU check in
// dispatch.cpp passes.

namespace medalab::kernels {

#if MEDALAB_HAVE_AVX2_TU
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i] * y[i];
    return hsum(acc) + tail;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(double a, double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

void gemv_avx2(const double* w, const double* x, const double* b, double* y,
               std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i)
        y[i] = (b ? b[i] : 0.0) + dot_avx2(w + i * n, x, n);
}

void gemv_t_acc_avx2(const double* w, const double* gy, double* gx,
                     std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        if (gy[i] == 0.0) continue;
        axpy_avx2(gy[i], w + i * n, gx, n);
    }
}

void ger_acc_avx2(const double* gy, const double* x, double* gw,
                  std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        if (gy[i] == 0.0) continue;
        axpy_avx2(gy[i], x, gw + i * n, n);
    }
}

void adam_step_avx2(double* p, double* m, double* v, const double* g,
                    std::size_t n, double lr, double beta1, double beta2,
                    double eps, double bc1, double bc2) {
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d v1mb1 = _mm256_set1_pd(1.0 - beta1);
    const __m256d v1mb2 = _mm256_set1_pd(1.0 - beta2);
    const __m256d vinv_bc1 = _mm256_set1_pd(1.0 / bc1);
    const __m256d vinv_bc2 = _mm256_set1_pd(1.0 / bc2);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vlr = _mm256_set1_pd(lr);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vg = _mm256_loadu_pd(g + i);
        __m256d vm = _mm256_fmadd_pd(v1mb1, vg, _mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)));
        __m256d vv = _mm256_fmadd_pd(v1mb2, _mm256_mul_pd(vg, vg),
                                     _mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)));
        _mm256_storeu_pd(m + i, vm);
        _mm256_storeu_pd(v + i, vv);
        __m256d mhat = _mm256_mul_pd(vm, vinv_bc1);
        __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vv, vinv_bc2)), veps);
        __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom);
        _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

const Kernels kAvx2 = {
    dot_avx2,       axpy_avx2,    scale_avx2,     gemv_avx2,
    gemv_t_acc_avx2, ger_acc_avx2, adam_step_avx2,
};

}  // namespace

const Kernels* avx2_kernels_impl() { return &kAvx2; }
#else
const Kernels* avx2_kernels_impl() { return nullptr; }
#endif

}  // namespace medalab::kernels
