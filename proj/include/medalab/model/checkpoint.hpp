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

#include <string>

#include "medalab/embedding/embedding.hpp"
#include "medalab/model/model.hpp"

namespace medalab::model {

// Binary little-endian container holding E (tables + Adam state) and
// theta (weights + Adam state). Layout:
//   magic "MEDACKP1" | u32 version | u64 schema digest | u32 D
//   u64 init seed | u8 init dist | f64 init param
//   u32 field count, then per field: u64 rows, rows*D doubles for the
//   table, then m, then v, then rows u64 step counts
//   u32 layer count, per layer: u64 rows, u64 cols, W, b, mW, vW, mb, vb
//   u8 has_attention, attention params + moments when set
//   u64 global step
struct Checkpoint {
    embedding::EmbeddingState emb;
    MlpState mlp;
};

void save_checkpoint(const std::string& path, const embedding::EmbeddingState& emb,
                     const MlpState& mlp);

// Schema is validated against the stored digest; mismatch throws
// SchemaViolation.
Checkpoint load_checkpoint(const std::string& path,
                           const std::vector<sparsedata::FieldSchema>& schema);

}  // namespace medalab::model
