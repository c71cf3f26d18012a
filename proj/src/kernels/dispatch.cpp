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
#include <cstdlib>
#include <cstring>

#include "medalab/kernels/kernels.hpp"

namespace medalab::kernels {

const Kernels* avx2_kernels_impl();  // defined in kernels_avx2.cpp

const Kernels* avx2_kernels() {
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        return avx2_kernels_impl();
#endif
    return nullptr;
}

namespace {

Backend choose_backend() {
    const char* env = std::getenv("MEDALAB_KERNELS");
    if (env != nullptr) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(env, "avx2") == 0 && avx2_kernels() != nullptr)
            return Backend::avx2;
        return Backend::scalar;
    }
    return avx2_kernels() != nullptr ? Backend::avx2 : Backend::scalar;
}

// Resolved once per process so every step of a run uses the same backend.
const Backend g_backend = choose_backend();

}  // namespace

Backend active_backend() { return g_backend; }

const Kernels& active() {
    return g_backend == Backend::avx2 ? *avx2_kernels() : scalar_kernels();
}

std::string backend_name() {
    return g_backend == Backend::avx2 ? "avx2" : "scalar";
}

}  // namespace medalab::kernels
