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
#include "medalab/sparsedata/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <unordered_set>

#include "medalab/common/rng.hpp"
#include "medalab/gradcore/tape.hpp"

namespace medalab::sparsedata {

namespace {
constexpr std::uint64_t kLatentTag = 0x1A7E27u;
constexpr std::uint64_t kHiddenWTag = 0x417DD3u;
constexpr std::uint64_t kDrawTag = 0xD4A3u;

// Per-id latent vector, derived on demand from (seed, field, id) so the
// ground truth needs no table of size sum(N^i) x d.
void latent_vector(std::uint64_t seed, std::uint32_t field, std::uint32_t id,
                   std::uint32_t d, double* out) {
    Rng rng(hash_combine(hash_combine(hash_combine(seed, kLatentTag), field), id));
    const double sd = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::uint32_t j = 0; j < d; ++j) out[j] = rng.normal(0.0, sd);
}

}  // namespace

ZipfSampler::ZipfSampler(std::uint64_t n, double s) {
    cdf_.resize(n);
    double acc = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
        acc += std::pow(static_cast<double>(i + 1), -s);
        cdf_[i] = acc;
    }
    const double inv = 1.0 / acc;
    for (double& c : cdf_) c *= inv;
}

std::uint64_t ZipfSampler::sample(double unit) const {
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), unit);
    return static_cast<std::uint64_t>(it == cdf_.end() ? cdf_.size() - 1
                                                       : it - cdf_.begin());
}

double ZipfSampler::pmf(std::uint64_t i) const {
    return i == 0 ? cdf_[0] : cdf_[i] - cdf_[i - 1];
}

SyntheticResult generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.zipf_exponent < 0.0) throw ConfigError("zipf exponent must be >= 0");
    if (cfg.latent_dim < 1) throw ConfigError("latent dim must be >= 1");
    if (cfg.noise_temp <= 0.0) throw ConfigError("noise temp must be > 0");
    if (cfg.n_examples == 0) throw ConfigError("n_examples must be > 0");
    if (cfg.schema.empty()) throw ConfigError("schema must have at least one field");
    for (const auto& f : cfg.schema)
        if (f.cardinality < 2) throw ConfigError("all cardinalities must be >= 2");
    if (!(cfg.test_fraction >= 0.0 && cfg.test_fraction < 1.0))
        throw ConfigError("test fraction must be in [0, 1)");

    const std::uint32_t d = cfg.latent_dim;
    std::vector<double> hidden_w(d);
    {
        Rng rng(hash_combine(cfg.seed, kHiddenWTag));
        for (double& w : hidden_w) w = rng.normal(0.0, 1.0);
    }

    std::vector<ZipfSampler> samplers;
    samplers.reserve(cfg.schema.size());
    for (const auto& f : cfg.schema)
        samplers.emplace_back(f.cardinality, cfg.zipf_exponent);

    DatasetMeta meta;
    meta.schema = cfg.schema;
    meta.generator_seed = cfg.seed;
    meta.provenance = Provenance::synthetic;

    SyntheticResult res;
    res.train = Dataset(meta);
    res.test = Dataset(meta);
    const std::uint64_t n_test =
        static_cast<std::uint64_t>(std::llround(cfg.test_fraction *
                                                static_cast<double>(cfg.n_examples)));
    const std::uint64_t n_train = cfg.n_examples - n_test;

    Rng draw(hash_combine(cfg.seed, kDrawTag));
    std::vector<std::vector<std::uint32_t>> fields(cfg.schema.size());
    std::vector<double> field_latent(d);
    std::vector<double> pooled(d);
    std::vector<double> row(d);

    for (std::uint64_t i = 0; i < cfg.n_examples; ++i) {
        std::fill(pooled.begin(), pooled.end(), 0.0);
        for (std::size_t f = 0; f < cfg.schema.size(); ++f) {
            const auto& fs = cfg.schema[f];
            auto& ids = fields[f];
            ids.clear();
            std::size_t want = 1;
            if (fs.kind == FieldSchema::Kind::multi_hot)
                want = 1 + static_cast<std::size_t>(draw.next_below(fs.max_multi));
            // duplicate ids within a field are rejected and redrawn
            while (ids.size() < want) {
                const auto id = static_cast<std::uint32_t>(
                    samplers[f].sample(draw.next_unit()));
                if (std::find(ids.begin(), ids.end(), id) == ids.end())
                    ids.push_back(id);
            }
            std::fill(field_latent.begin(), field_latent.end(), 0.0);
            for (std::uint32_t id : ids) {
                latent_vector(cfg.seed, static_cast<std::uint32_t>(f), id, d,
                              row.data());
                for (std::uint32_t j = 0; j < d; ++j) field_latent[j] += row[j];
            }
            const double inv = 1.0 / static_cast<double>(ids.size());
            for (std::uint32_t j = 0; j < d; ++j)
                pooled[j] += field_latent[j] * inv;
        }
        const double inv_fields = 1.0 / static_cast<double>(cfg.schema.size());
        double logit = 0.0;
        for (std::uint32_t j = 0; j < d; ++j)
            logit += pooled[j] * inv_fields * hidden_w[j];
        logit /= cfg.noise_temp;
        const double p = gradcore::sigmoid(logit);
        const std::uint8_t label = draw.next_unit() < p ? 1 : 0;

        if (i < n_train) {
            res.train.append(label, fields);
            res.train_logits.push_back(logit);
        } else {
            res.test.append(label, fields);
            res.test_logits.push_back(logit);
        }
    }
    return res;
}

void generate_synthetic_files(const SyntheticConfig& cfg, const std::string& out_dir) {
    SyntheticResult res = generate_synthetic(cfg);
    std::filesystem::create_directories(out_dir);

    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", cfg.zipf_exponent);
    auto annotate = [&](Dataset& ds) {
        DatasetMeta m = ds.meta();
        m.extra.emplace_back("zipf_exponent", buf);
        m.extra.emplace_back("latent_dim", std::to_string(cfg.latent_dim));
        char tb[64];
        std::snprintf(tb, sizeof(tb), "%.17g", cfg.noise_temp);
        m.extra.emplace_back("noise_temp", tb);
        char sb[64];
        std::snprintf(sb, sizeof(sb), "%.6f", low_occurrence_fraction(ds, 3));
        m.extra.emplace_back("sparsity_lt3", sb);
        ds.set_meta(std::move(m));
    };
    annotate(res.train);
    annotate(res.test);
    serialize_dataset(res.train, out_dir + "/train.txt");
    serialize_dataset(res.test, out_dir + "/test.txt");
}

}  // namespace medalab::sparsedata
