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
#include "medalab/training/trainer.hpp"

#include <chrono>
#include <cmath>

namespace medalab::training {

namespace {

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

}  // namespace

EpochPolicy EpochPolicy::parse(const std::string& name, std::uint32_t epochs) {
    EpochPolicy p;
    p.max_epochs = epochs;
    if (name == "one-epoch") p.kind = Kind::one_epoch;
    else if (name == "naive-multi") p.kind = Kind::naive_multi;
    else if (name == "meda") p.kind = Kind::meda;
    else if (name == "freeze-after-first") p.kind = Kind::freeze_after_first;
    else if (name == "frozen-embedding") p.kind = Kind::frozen_embedding;
    else if (name == "mlp-replay") p.kind = Kind::mlp_replay;
    else throw ConfigError("unknown policy '" + name + "'");
    if (p.kind == Kind::one_epoch) p.max_epochs = 1;
    if (p.max_epochs < 1) throw ConfigError("max epochs must be >= 1");
    return p;
}

std::string EpochPolicy::name() const {
    switch (kind) {
        case Kind::one_epoch: return "one-epoch";
        case Kind::naive_multi: return "naive-multi";
        case Kind::meda: return "meda";
        case Kind::freeze_after_first: return "freeze-after-first";
        case Kind::frozen_embedding: return "frozen-embedding";
        case Kind::mlp_replay: return "mlp-replay";
    }
    return "?";
}

FreezeMask freeze_mask(const EpochPolicy& policy, std::uint32_t epoch_index) {
    switch (policy.kind) {
        case EpochPolicy::Kind::meda:
            return {true, true, epoch_index > 0};
        case EpochPolicy::Kind::freeze_after_first:
        case EpochPolicy::Kind::mlp_replay:
            return {true, epoch_index == 0, false};
        case EpochPolicy::Kind::frozen_embedding:
            return {true, false, false};
        case EpochPolicy::Kind::one_epoch:
        case EpochPolicy::Kind::naive_multi:
            return {true, true, false};
    }
    return {true, true, false};
}

EvalResult evaluate(const model::ModelConfig& cfg, const model::MlpState& mlp,
                    const embedding::EmbeddingState& emb,
                    const sparsedata::Dataset& ds, std::size_t limit) {
    const std::size_t n = limit > 0 ? std::min(limit, ds.size()) : ds.size();
    std::vector<metrics::ScoredLabel> scored;
    scored.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        scored.push_back({model::predict(cfg, mlp, emb, ds, i), ds.label(i)});
    EvalResult r;
    r.n = n;
    r.logloss = metrics::mean_logloss(scored);
    try {
        r.auc = metrics::auc(scored);
    } catch (const UndefinedMetric&) {
        r.auc = std::nan("");
    }
    return r;
}

void train_one_epoch(RunState& state, const TrainConfig& cfg,
                     const model::ModelConfig& model_cfg,
                     const sparsedata::Dataset& train,
                     const sparsedata::Dataset& test, const FreezeMask& mask) {
    const std::size_t n = train.size();
    if (n == 0) throw DegenerateDataset("empty training dataset");

    std::vector<std::uint32_t> order;
    if (cfg.shuffle) {
        order = sparsedata::epoch_shuffle(n, state.epoch_index, cfg.seed);
    } else {
        order.resize(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
    }

    embedding::SparseGrads row_grads(state.emb.dim());
    model::MlpGrads mlp_grads(state.mlp);
    gradcore::Tape tape;

    // Predictions over the first boundary_eval_step steps feed the
    // train-window record at the boundary eval point.
    std::vector<metrics::ScoredLabel> window;

    auto record = [&](const std::string& split, const EvalResult& ev) {
        if (std::isnan(ev.auc)) return;  // degenerate window, skip
        metrics::MetricsRecord r;
        r.epoch = state.epoch_index;
        r.split = split;
        r.auc = ev.auc;
        r.logloss = ev.logloss;
        r.examples_seen = state.examples_seen;
        r.wall_seconds = now_seconds() - state.wall_start;
        state.records.push_back(std::move(r));
    };

    std::uint32_t step_in_epoch = 0;
    std::size_t pos = 0;
    while (pos < n) {
        const std::size_t bsz = std::min<std::size_t>(cfg.batch, n - pos);
        row_grads.clear();
        mlp_grads.zero();
        double batch_loss = 0.0;
        for (std::size_t k = 0; k < bsz; ++k) {
            const std::uint32_t ex = order[pos + k];
            tape.reset();
            const auto logit = model::forward(
                model_cfg, state.mlp, state.emb, train, ex, tape,
                mask.update_emb ? &row_grads : nullptr,
                mask.update_mlp ? &mlp_grads : nullptr);
            tape.bce_loss(logit, train.label(ex));
            batch_loss += tape.loss();
            tape.backward();
            if (step_in_epoch < cfg.boundary_eval_step)
                window.push_back({tape.prob(), train.label(ex)});
        }
        batch_loss /= static_cast<double>(bsz);
        if (!std::isfinite(batch_loss)) throw DivergedRun(state.global_step);

        const double inv = 1.0 / static_cast<double>(bsz);
        if (mask.update_mlp) {
            mlp_grads.scale(inv);
            model::dense_adam_update(state.mlp, mlp_grads, cfg.lr, cfg.beta1,
                                     cfg.beta2, cfg.eps);
        }
        if (mask.update_emb) {
            row_grads.scale_all(inv);
            state.emb.sparse_adam_update(row_grads, cfg.lr, cfg.beta1, cfg.beta2,
                                         cfg.eps);
        }

        state.examples_seen += bsz;
        ++state.global_step;
        if (step_in_epoch < cfg.trace_steps)
            state.trace.push_back({state.epoch_index, step_in_epoch, batch_loss});
        ++step_in_epoch;

        if (cfg.boundary_eval_step > 0 && step_in_epoch == cfg.boundary_eval_step) {
            EvalResult wr;
            wr.n = window.size();
            wr.logloss = metrics::mean_logloss(window);
            try {
                wr.auc = metrics::auc(window);
            } catch (const UndefinedMetric&) {
                wr.auc = std::nan("");
            }
            record("train", wr);
            record("test", evaluate(model_cfg, state.mlp, state.emb, test));
            window.clear();
        }
        if (cfg.cadence == TrainConfig::EvalCadence::per_k_steps &&
            cfg.eval_every_steps > 0 && step_in_epoch % cfg.eval_every_steps == 0) {
            record("test", evaluate(model_cfg, state.mlp, state.emb, test));
        }
        pos += bsz;
    }

    // epoch-end evals
    record("train",
           evaluate(model_cfg, state.mlp, state.emb, train, cfg.eval_train_cap));
    record("test", evaluate(model_cfg, state.mlp, state.emb, test));
}

RunResult run_policy(const EpochPolicy& policy, const TrainConfig& cfg,
                     const model::ModelConfig& model_cfg,
                     const sparsedata::Dataset& train,
                     const sparsedata::Dataset& test,
                     const std::function<bool(const RunState&)>& stop_after_epoch) {
    if (train.size() == 0) throw DegenerateDataset("empty training dataset");
    EpochPolicy pol = policy;
    if (pol.kind == EpochPolicy::Kind::one_epoch) pol.max_epochs = 1;

    RunState state;
    state.wall_start = now_seconds();
    state.mlp = model::MlpState(model_cfg, train.field_count(), cfg.seed);
    state.emb = embedding::EmbeddingState(train.meta().schema, model_cfg.dim,
                                          model_cfg.init, cfg.seed, 0);

    for (std::uint32_t i = 0; i < pol.max_epochs; ++i) {
        state.epoch_index = i;
        const FreezeMask mask = freeze_mask(pol, i);
        if (mask.reinit_emb)
            state.emb.reinitialize(i, cfg.seed, cfg.preserve_moments_on_reinit);
        train_one_epoch(state, cfg, model_cfg, train, test, mask);
        if (stop_after_epoch && stop_after_epoch(state)) break;
    }

    RunResult r;
    r.mlp = std::move(state.mlp);
    r.emb = std::move(state.emb);
    r.records = std::move(state.records);
    r.trace = std::move(state.trace);
    return r;
}

std::vector<metrics::MetricsRecord> epoch_end_test_records(
    const std::vector<metrics::MetricsRecord>& records) {
    // the last test record of each epoch is the epoch-end eval
    std::vector<metrics::MetricsRecord> out;
    for (const auto& r : records) {
        if (r.split != "test") continue;
        if (!out.empty() && out.back().epoch == r.epoch)
            out.back() = r;
        else
            out.push_back(r);
    }
    return out;
}

}  // namespace medalab::training
