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
#include <string>
#include <vector>

#include "medalab/embedding/embedding.hpp"
#include "medalab/gradcore/tape.hpp"
#include "medalab/sparsedata/dataset.hpp"

namespace medalab::model {

using embedding::EmbeddingState;
using embedding::InitSpec;
using embedding::SparseGrads;
using gradcore::DenseMatrix;
using gradcore::Tape;

struct ModelConfig {
    enum class Arch { dnn, din_lite } arch = Arch::dnn;
    std::vector<std::uint32_t> hidden = {64, 32};  // sizes before the logit layer
    std::uint32_t dim = 16;                        // embedding D
    std::uint32_t attn_hidden = 16;                // din-lite scorer width
    // Field whose embedding is the attention target; -1 picks the one-hot
    // field with the same cardinality as the behavior field.
    int target_field = -1;
    bool sum_pool = false;  // sum instead of mean for multi-hot fields
    InitSpec init;          // embedding (re)initialization distribution

    static ModelConfig parse_arch(const std::string& name);  // "dnn" | "din-lite"
    std::string arch_name() const;
};

// Dense MLP weights plus, for din-lite, the attention scorer; all with
// Adam moments and one global step count. Persists across epochs under
// every policy.
class MlpState {
  public:
    MlpState() = default;
    MlpState(const ModelConfig& cfg, std::size_t field_count, std::uint64_t seed);

    std::vector<DenseMatrix> w;
    std::vector<std::vector<double>> b;
    DenseMatrix attn_w1;
    std::vector<double> attn_b1;
    std::vector<double> attn_w2;
    double attn_b2 = 0.0;

    std::uint64_t step = 0;

    std::size_t layer_count() const { return w.size(); }
    std::size_t param_count() const;
    bool has_attention() const { return attn_w1.rows > 0; }

    // FNV digest over all parameter values (moments excluded).
    std::uint64_t checksum() const;

    friend bool operator==(const MlpState&, const MlpState&) = default;

    // Moments, laid out like the parameters.
    std::vector<DenseMatrix> mw, vw;
    std::vector<std::vector<double>> mb, vb;
    DenseMatrix m_attn_w1, v_attn_w1;
    std::vector<double> m_attn_b1, v_attn_b1, m_attn_w2, v_attn_w2;
    double m_attn_b2 = 0.0, v_attn_b2 = 0.0;
};

// Gradient buffers shaped like MlpState's parameters; accumulated over a
// minibatch, then consumed by dense_adam_update.
struct MlpGrads {
    MlpGrads() = default;
    explicit MlpGrads(const MlpState& st);
    std::vector<std::vector<double>> gw, gb;
    std::vector<double> g_attn_w1, g_attn_b1, g_attn_w2;
    double g_attn_b2 = 0.0;
    void zero();
    void scale(double s);
};

// One bias-corrected Adam step over every dense parameter.
void dense_adam_update(MlpState& st, const MlpGrads& g, double lr, double beta1,
                       double beta2, double eps);

// Records the full forward pass on the tape and returns the logit node.
// When grads are supplied, the tape accumulates parameter gradients into
// them on backward(); with nullptrs the pass is evaluation-only.
Tape::Ref forward(const ModelConfig& cfg, const MlpState& mlp,
                  const EmbeddingState& emb, const sparsedata::Dataset& ds,
                  std::size_t example, Tape& tape, SparseGrads* row_grads = nullptr,
                  MlpGrads* mlp_grads = nullptr);

// Evaluation-only probability for one example.
double predict(const ModelConfig& cfg, const MlpState& mlp, const EmbeddingState& emb,
               const sparsedata::Dataset& ds, std::size_t example);

int resolve_target_field(const ModelConfig& cfg,
                         const std::vector<sparsedata::FieldSchema>& schema,
                         std::size_t behavior_field);

}  // namespace medalab::model
