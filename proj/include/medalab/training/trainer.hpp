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
#include <functional>
#include <string>
#include <vector>

#include "medalab/embedding/embedding.hpp"
#include "medalab/metrics/metrics.hpp"
#include "medalab/model/model.hpp"
#include "medalab/sparsedata/dataset.hpp"

namespace medalab::training {

struct EpochPolicy {
    enum class Kind {
        one_epoch,
        naive_multi,
        meda,
        freeze_after_first,
        frozen_embedding,
        mlp_replay,
    } kind = Kind::one_epoch;
    std::uint32_t max_epochs = 1;  // OneEpoch forces 1

    static EpochPolicy parse(const std::string& name, std::uint32_t epochs);
    std::string name() const;
};

// Per-epoch gate deciding what trains and whether embeddings are redrawn.
struct FreezeMask {
    bool update_mlp;
    bool update_emb;
    bool reinit_emb;
};

// Pure function of (policy kind, epoch index).
FreezeMask freeze_mask(const EpochPolicy& policy, std::uint32_t epoch_index);

struct TrainConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint32_t batch = 256;
    std::uint64_t seed = 1;
    enum class EvalCadence { per_epoch, per_k_steps } cadence = EvalCadence::per_epoch;
    std::uint32_t eval_every_steps = 0;  // per_k_steps cadence
    // Test is also evaluated this many steps into each epoch so the
    // boundary jump is visible in the logs. 0 disables.
    std::uint32_t boundary_eval_step = 100;
    bool shuffle = true;
    // Ablation: keep Adam moments through an embedding reinit.
    bool preserve_moments_on_reinit = false;
    // Train-split eval uses at most this many examples (prefix order).
    std::uint32_t eval_train_cap = 50000;
    // Per-step train loss is traced for this many steps after each epoch
    // start (the boundary-dense sampling in run_curves).
    std::uint32_t trace_steps = 100;
};

struct StepTrace {
    std::uint32_t epoch;
    std::uint32_t step;       // step index within the epoch
    double batch_logloss;
};

// Mutable state of one training run.
struct RunState {
    std::uint32_t epoch_index = 0;
    model::MlpState mlp;
    embedding::EmbeddingState emb;
    std::uint64_t examples_seen = 0;
    std::uint64_t global_step = 0;
    std::vector<metrics::MetricsRecord> records;
    std::vector<StepTrace> trace;
    double wall_start = 0.0;  // steady-clock seconds at run start
};

struct RunResult {
    model::MlpState mlp;
    embedding::EmbeddingState emb;
    std::vector<metrics::MetricsRecord> records;
    std::vector<StepTrace> trace;
};

// One full pass over epoch_shuffle(dataset, state.epoch_index, seed) in
// minibatches. Throws DivergedRun on a non-finite batch loss.
void train_one_epoch(RunState& state, const TrainConfig& cfg,
                     const model::ModelConfig& model_cfg,
                     const sparsedata::Dataset& train,
                     const sparsedata::Dataset& test, const FreezeMask& mask);

// Full policy run: initializes theta and E from cfg.seed, executes
// max_epochs epochs under the policy's freeze masks, evaluating per the
// cadence. theta persists across every epoch boundary. When
// stop_after_epoch returns true the remaining epochs are skipped (used
// by the recovery experiment's early exit).
RunResult run_policy(const EpochPolicy& policy, const TrainConfig& cfg,
                     const model::ModelConfig& model_cfg,
                     const sparsedata::Dataset& train,
                     const sparsedata::Dataset& test,
                     const std::function<bool(const RunState&)>& stop_after_epoch = {});

// Scores every example of ds; returns (auc, logloss, n). AUC is NaN when
// undefined (single-class input).
struct EvalResult {
    double auc;
    double logloss;
    std::size_t n;
};
EvalResult evaluate(const model::ModelConfig& cfg, const model::MlpState& mlp,
                    const embedding::EmbeddingState& emb,
                    const sparsedata::Dataset& ds, std::size_t limit = 0);

// Epoch-end test records in epoch order (the step-level boundary evals
// filtered out).
std::vector<metrics::MetricsRecord> epoch_end_test_records(
    const std::vector<metrics::MetricsRecord>& records);

}  // namespace medalab::training
