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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "medalab/common/errors.hpp"

namespace medalab::sparsedata {

struct FieldSchema {
    std::uint32_t field_id = 0;
    std::string name;
    std::uint64_t cardinality = 0;  // N^i
    enum class Kind { one_hot, multi_hot } kind = Kind::one_hot;
    std::uint32_t max_multi = 1;  // cap on ids per example for multi-hot

    friend bool operator==(const FieldSchema&, const FieldSchema&) = default;
};

enum class Provenance { synthetic, imported };

struct DatasetMeta {
    std::vector<FieldSchema> schema;
    std::uint64_t example_count = 0;
    std::optional<std::uint64_t> generator_seed;
    Provenance provenance = Provenance::imported;
    // Free-form key=value entries carried through the .meta sidecar
    // (zipf exponent, sparsity statistic, ...).
    std::vector<std::pair<std::string, std::string>> extra;
};

// One example viewed out of the flat dataset storage.
struct ExampleView {
    std::uint8_t label;
    const std::vector<std::span<const std::uint32_t>>* fields;
};

// In-memory dataset with flat id storage. Immutable once built; shareable
// across threads.
class Dataset {
  public:
    Dataset() = default;
    Dataset(DatasetMeta meta) : meta_(std::move(meta)) {}

    const DatasetMeta& meta() const { return meta_; }
    void set_meta(DatasetMeta m) { meta_ = std::move(m); meta_.example_count = labels_.size(); }
    std::size_t size() const { return labels_.size(); }
    std::size_t field_count() const { return meta_.schema.size(); }

    std::uint8_t label(std::size_t i) const { return labels_[i]; }
    std::span<const std::uint32_t> field_ids(std::size_t i, std::size_t f) const {
        const std::size_t slot = i * field_count() + f;
        return {ids_.data() + offsets_[slot], offsets_[slot + 1] - offsets_[slot]};
    }

    // Validates ids against the schema while appending.
    void append(std::uint8_t label,
                const std::vector<std::vector<std::uint32_t>>& per_field_ids);

    // FNV-1a digest over the schema (field order, cardinalities, kinds).
    std::uint64_t schema_digest() const;
    // Digest over schema + all labels/ids; identifies dataset content.
    std::uint64_t content_digest() const;

  private:
    DatasetMeta meta_;
    std::vector<std::uint8_t> labels_;
    std::vector<std::uint32_t> ids_;
    std::vector<std::uint64_t> offsets_ = {0};
};

// Canonical text format, see README. Throws ParseError with the 1-based
// line number on malformed input, SchemaViolation on out-of-range ids.
Dataset parse_dataset(const std::string& path);
void serialize_dataset(const Dataset& ds, const std::string& path);

// Keep-by-hash subsampling: example i survives iff
// hash(seed, i) / 2^64 < fraction, so smaller fractions at the same seed
// are subsets of larger ones. Throws DegenerateDataset on empty result.
Dataset subsample(const Dataset& ds, double fraction, std::uint64_t seed);

// Deterministic permutation of [0, n) as a function of (seed, epoch).
std::vector<std::uint32_t> epoch_shuffle(std::size_t n, std::uint32_t epoch_index,
                                         std::uint64_t seed);

// Fraction of distinct ids (over all fields) occurring fewer than k times;
// the sparsity statistic reported in run metadata.
double low_occurrence_fraction(const Dataset& ds, std::uint64_t k);

std::uint64_t schema_digest(const std::vector<FieldSchema>& schema);

}  // namespace medalab::sparsedata
