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
#include "medalab/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace medalab::metrics {

double auc(const std::vector<ScoredLabel>& scores) {
    std::size_t n_pos = 0;
    for (const auto& s : scores) n_pos += s.label;
    const std::size_t n_neg = scores.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw UndefinedMetric("AUC needs at least one positive and one negative");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a].p < scores[b].p;
    });

    // average ranks over tie groups, 1-based
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]].p == scores[order[i]].p) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1..j
        for (std::size_t t = i; t < j; ++t)
            if (scores[order[t]].label) pos_rank_sum += avg_rank;
        i = j;
    }
    const double np = static_cast<double>(n_pos);
    const double nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double mean_logloss(const std::vector<ScoredLabel>& scores) {
    constexpr double kClamp = 1e-12;
    double sum = 0.0;
    for (const auto& s : scores) {
        const double p = std::clamp(s.p, kClamp, 1.0 - kClamp);
        sum += s.label ? -std::log(p) : -std::log(1.0 - p);
    }
    return scores.empty() ? 0.0 : sum / static_cast<double>(scores.size());
}

std::optional<std::uint32_t> epochs_to_recover(double target_auc,
                                               const std::vector<MetricsRecord>& records,
                                               std::uint32_t cap) {
    for (const auto& r : records) {
        if (r.split != "test") continue;
        if (r.epoch + 1 > cap) break;
        if (r.auc >= target_auc) return r.epoch + 1;
    }
    return std::nullopt;
}

void write_metrics_csv(const std::vector<MetricsRecord>& records,
                       const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path);
    out << "epoch,split,auc,logloss,examples_seen,wall_seconds\n";
    char buf[160];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%u,%s,%.17g,%.17g,%llu,%.6f\n", r.epoch,
                      r.split.c_str(), r.auc, r.logloss,
                      static_cast<unsigned long long>(r.examples_seen),
                      r.wall_seconds);
        out << buf;
    }
}

std::vector<MetricsRecord> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<MetricsRecord> out;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        MetricsRecord r;
        std::string tok;
        std::getline(ss, tok, ',');
        r.epoch = static_cast<std::uint32_t>(std::stoul(tok));
        std::getline(ss, r.split, ',');
        std::getline(ss, tok, ',');
        r.auc = std::stod(tok);
        std::getline(ss, tok, ',');
        r.logloss = std::stod(tok);
        std::getline(ss, tok, ',');
        r.examples_seen = std::stoull(tok);
        std::getline(ss, tok, ',');
        r.wall_seconds = std::stod(tok);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace medalab::metrics
