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
#include <string>
#include <vector>

#include "medalab/common/errors.hpp"

namespace medalab::metrics {

struct ScoredLabel {
    double p;
    std::uint8_t label;
};

// Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 * P(tie), computed by
// sorting and average-ranking ties in O(n log n). Throws UndefinedMetric
// when only one class is present.
double auc(const std::vector<ScoredLabel>& scores);

// Mean binary cross-entropy with p clamped to [1e-12, 1 - 1e-12].
double mean_logloss(const std::vector<ScoredLabel>& scores);

struct MetricsRecord {
    std::uint32_t epoch = 0;
    std::string split;  // "train" | "test"
    double auc = 0.0;
    double logloss = 0.0;
    std::uint64_t examples_seen = 0;
    double wall_seconds = 0.0;
};

// Smallest epoch (1-based count) whose test AUC reaches target, scanning
// records in epoch order; nullopt when not reached within cap epochs.
std::optional<std::uint32_t> epochs_to_recover(double target_auc,
                                               const std::vector<MetricsRecord>& records,
                                               std::uint32_t cap = 16);

// Metrics log: header `epoch,split,auc,logloss,examples_seen,wall_seconds`.
void write_metrics_csv(const std::vector<MetricsRecord>& records,
                       const std::string& path);
std::vector<MetricsRecord> read_metrics_csv(const std::string& path);

}  // namespace medalab::metrics
