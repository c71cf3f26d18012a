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
#include <cmath>
#include <cstddef>

#include "medalab/kernels/kernels.hpp"

// Reference kernels. Plain loops, no intrinsics; the AVX2 variants are
// checked against these.

namespace medalab::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void gemv_scalar(const double* w, const double* x, const double* b, double* y,
                 std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double acc = b ? b[i] : 0.0;
        const double* row = w + i * n;
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
}

void gemv_t_acc_scalar(const double* w, const double* gy, double* gx,
                       std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double g = gy[i];
        if (g == 0.0) continue;
        const double* row = w + i * n;
        for (std::size_t j = 0; j < n; ++j) gx[j] += row[j] * g;
    }
}

void ger_acc_scalar(const double* gy, const double* x, double* gw,
                    std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double g = gy[i];
        if (g == 0.0) continue;
        double* row = gw + i * n;
        for (std::size_t j = 0; j < n; ++j) row[j] += g * x[j];
    }
}

void adam_step_scalar(double* p, double* m, double* v, const double* g,
                      std::size_t n, double lr, double beta1, double beta2,
                      double eps, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

const Kernels kScalar = {
    dot_scalar,     axpy_scalar,    scale_scalar,     gemv_scalar,
    gemv_t_acc_scalar, ger_acc_scalar, adam_step_scalar,
};

}  // namespace

const Kernels& scalar_kernels() { return kScalar; }

}  // namespace medalab::kernels
