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

#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "medalab/gradcore/matrix.hpp"
#include "medalab/sparsedata/dataset.hpp"

namespace medalab::embedding {

using gradcore::DenseMatrix;

// How table rows are drawn. Row values are a pure function of
// hash(seed, epoch-index, field-id, row-id), so reinitialization at a
// given epoch is reproducible and order-independent.
struct InitSpec {
    enum class Dist { uniform, normal } dist = Dist::uniform;
    // Half-width a for uniform(-a, a), or sigma for normal(0, sigma).
    // <= 0 means "derive from dim": a = sigma = 1/sqrt(D).
    double param = -1.0;

    double resolved(std::uint32_t dim) const;

    friend bool operator==(const InitSpec&, const InitSpec&) = default;
};

// Sparse per-(field,row) gradient accumulator for one minibatch.
class SparseGrads {
  public:
    explicit SparseGrads(std::uint32_t dim) : dim_(dim) {}

    // Returns the accumulation buffer for (field, row), creating a zeroed
    // slot on first touch. Returned pointers stay valid until clear();
    // slots live in individually allocated chunks for exactly that reason.
    double* slot(std::uint32_t field, std::uint32_t row);

    void clear();
    void scale_all(double s);
    std::size_t touched_count() const { return index_.size(); }
    std::uint32_t dim() const { return dim_; }

    template <typename F>
    void for_each(F&& f) const {  // f(field, row, const double* grad)
        for (const auto& [key, idx] : index_)
            f(static_cast<std::uint32_t>(key >> 32),
              static_cast<std::uint32_t>(key & 0xffffffffu), pool_[idx].get());
    }

  private:
    std::uint32_t dim_;
    std::unordered_map<std::uint64_t, std::uint32_t> index_;
    // Chunk pool; kept across clear() so steady-state batches allocate
    // nothing.
    std::vector<std::unique_ptr<double[]>> pool_;
};

// All per-field embedding dictionaries plus their lazy Adam state. The
// object MEDA reinitializes at epoch boundaries; it never touches the MLP.
class EmbeddingState {
  public:
    EmbeddingState() = default;
    EmbeddingState(const std::vector<sparsedata::FieldSchema>& schema,
                   std::uint32_t dim, InitSpec spec, std::uint64_t seed,
                   std::uint32_t epoch_index);

    // Redraws every table with the epoch index folded into the seed and
    // zeroes Adam moments and row step counts (unless preserve_moments,
    // an ablation flag). Bitwise identical to constructing fresh at the
    // same epoch index.
    void reinitialize(std::uint32_t epoch_index, std::uint64_t seed,
                      bool preserve_moments = false);

    const double* row(std::uint32_t field, std::uint32_t row_id) const {
        return tables_[field].row(row_id);
    }
    double* mutable_row(std::uint32_t field, std::uint32_t row_id) {
        return tables_[field].row(row_id);
    }

    std::uint32_t dim() const { return dim_; }
    std::size_t field_count() const { return tables_.size(); }
    const DenseMatrix& table(std::uint32_t field) const { return tables_[field]; }
    const DenseMatrix& moments_m(std::uint32_t field) const { return m_[field]; }
    const DenseMatrix& moments_v(std::uint32_t field) const { return v_[field]; }
    const std::vector<std::uint64_t>& row_steps(std::uint32_t field) const {
        return steps_[field];
    }
    const std::vector<sparsedata::FieldSchema>& schema() const { return schema_; }
    const InitSpec& init_spec() const { return init_spec_; }
    std::uint64_t seed() const { return seed_; }

    // Raw access for the checkpoint reader.
    DenseMatrix& table_mut(std::uint32_t field) { return tables_[field]; }
    DenseMatrix& moments_m_mut(std::uint32_t field) { return m_[field]; }
    DenseMatrix& moments_v_mut(std::uint32_t field) { return v_[field]; }
    std::vector<std::uint64_t>& row_steps_mut(std::uint32_t field) {
        return steps_[field];
    }

    // Lazy sparse Adam: only the touched rows advance, each on its own
    // step count.
    void sparse_adam_update(const SparseGrads& grads, double lr, double beta1,
                            double beta2, double eps);

    // FNV digest over all table values; moments excluded.
    std::uint64_t table_checksum() const;

    friend bool operator==(const EmbeddingState&, const EmbeddingState&) = default;

  private:
    void fill_tables(std::uint32_t epoch_index);

    std::vector<sparsedata::FieldSchema> schema_;
    std::uint32_t dim_ = 0;
    InitSpec init_spec_;
    std::uint64_t seed_ = 0;
    std::vector<DenseMatrix> tables_;
    std::vector<DenseMatrix> m_;
    std::vector<DenseMatrix> v_;
    std::vector<std::vector<std::uint64_t>> steps_;
};

}  // namespace medalab::embedding
