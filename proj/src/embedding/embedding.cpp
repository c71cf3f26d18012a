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
#include "medalab/embedding/embedding.hpp"

#include <cmath>
#include <cstring>

#include "medalab/common/rng.hpp"
#include "medalab/kernels/kernels.hpp"

namespace medalab::embedding {

double InitSpec::resolved(std::uint32_t dim) const {
    return param > 0.0 ? param : 1.0 / std::sqrt(static_cast<double>(dim));
}

double* SparseGrads::slot(std::uint32_t field, std::uint32_t row) {
    const std::uint64_t key = (static_cast<std::uint64_t>(field) << 32) | row;
    auto [it, inserted] = index_.try_emplace(
        key, static_cast<std::uint32_t>(index_.size()));
    const std::uint32_t idx = it->second;
    if (inserted) {
        if (idx == pool_.size())
            pool_.push_back(std::make_unique<double[]>(dim_));  // zeroed
        else
            std::memset(pool_[idx].get(), 0, dim_ * sizeof(double));
    }
    return pool_[idx].get();
}

void SparseGrads::clear() {
    index_.clear();  // chunks are re-zeroed lazily on next touch
}

void SparseGrads::scale_all(double s) {
    const auto& k = kernels::active();
    for (const auto& [key, idx] : index_) {
        (void)key;
        k.scale(s, pool_[idx].get(), dim_);
    }
}

EmbeddingState::EmbeddingState(const std::vector<sparsedata::FieldSchema>& schema,
                               std::uint32_t dim, InitSpec spec, std::uint64_t seed,
                               std::uint32_t epoch_index)
    : schema_(schema), dim_(dim), init_spec_(spec), seed_(seed) {
    if (dim < 1) throw ConfigError("embedding dim must be >= 1");
    tables_.reserve(schema.size());
    for (const auto& f : schema_) {
        tables_.emplace_back(f.cardinality, dim_);
        m_.emplace_back(f.cardinality, dim_);
        v_.emplace_back(f.cardinality, dim_);
        steps_.emplace_back(f.cardinality, 0);
    }
    fill_tables(epoch_index);
}

void EmbeddingState::fill_tables(std::uint32_t epoch_index) {
    const double p = init_spec_.resolved(dim_);
    for (std::size_t f = 0; f < tables_.size(); ++f) {
        DenseMatrix& t = tables_[f];
        for (std::size_t r = 0; r < t.rows; ++r) {
            Rng rng(hash_combine(
                hash_combine(hash_combine(seed_, epoch_index), static_cast<std::uint64_t>(f)),
                r));
            double* row = t.row(r);
            if (init_spec_.dist == InitSpec::Dist::uniform)
                for (std::uint32_t j = 0; j < dim_; ++j) row[j] = rng.uniform(-p, p);
            else
                for (std::uint32_t j = 0; j < dim_; ++j) row[j] = rng.normal(0.0, p);
        }
    }
}

void EmbeddingState::reinitialize(std::uint32_t epoch_index, std::uint64_t seed,
                                  bool preserve_moments) {
    seed_ = seed;
    fill_tables(epoch_index);
    if (!preserve_moments) {
        for (std::size_t f = 0; f < tables_.size(); ++f) {
            std::fill(m_[f].data.begin(), m_[f].data.end(), 0.0);
            std::fill(v_[f].data.begin(), v_[f].data.end(), 0.0);
            std::fill(steps_[f].begin(), steps_[f].end(), 0);
        }
    }
}

void EmbeddingState::sparse_adam_update(const SparseGrads& grads, double lr,
                                        double beta1, double beta2, double eps) {
    const auto& k = kernels::active();
    grads.for_each([&](std::uint32_t field, std::uint32_t row, const double* g) {
        const std::uint64_t t = ++steps_[field][row];
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        k.adam_step(tables_[field].row(row), m_[field].row(row), v_[field].row(row),
                    g, dim_, lr, beta1, beta2, eps, bc1, bc2);
    });
}

std::uint64_t EmbeddingState::table_checksum() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& t : tables_) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(t.data.data());
        for (std::size_t i = 0; i < t.data.size() * sizeof(double); ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    }
    return h;
}

}  // namespace medalab::embedding
