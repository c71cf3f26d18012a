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
#include "medalab/model/model.hpp"

#include <cmath>
#include <cstring>

#include "medalab/common/rng.hpp"
#include "medalab/kernels/kernels.hpp"

namespace medalab::model {

namespace {

void init_matrix(DenseMatrix& w, Rng& rng) {
    // uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
    const double a = 1.0 / std::sqrt(static_cast<double>(w.cols));
    for (double& x : w.data) x = rng.uniform(-a, a);
}

void fnv_doubles(std::uint64_t& h, const double* p, std::size_t n) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n * sizeof(double); ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
    }
}

}  // namespace

ModelConfig ModelConfig::parse_arch(const std::string& name) {
    ModelConfig cfg;
    if (name == "dnn") cfg.arch = Arch::dnn;
    else if (name == "din-lite") cfg.arch = Arch::din_lite;
    else throw ConfigError("unknown architecture '" + name + "'");
    return cfg;
}

std::string ModelConfig::arch_name() const {
    return arch == Arch::dnn ? "dnn" : "din-lite";
}

MlpState::MlpState(const ModelConfig& cfg, std::size_t field_count,
                   std::uint64_t seed) {
    if (cfg.hidden.empty()) throw ConfigError("hidden sizes must be non-empty");
    if (cfg.dim < 1) throw ConfigError("embedding dim must be >= 1");
    Rng rng(hash_combine(seed, 0x71E7A0u));

    std::size_t in = field_count * cfg.dim;
    for (std::uint32_t hsz : cfg.hidden) {
        w.emplace_back(hsz, in);
        init_matrix(w.back(), rng);
        b.emplace_back(hsz, 0.0);
        in = hsz;
    }
    w.emplace_back(1, in);  // logit layer
    init_matrix(w.back(), rng);
    b.emplace_back(1, 0.0);

    if (cfg.arch == ModelConfig::Arch::din_lite) {
        attn_w1 = DenseMatrix(cfg.attn_hidden, 4 * cfg.dim);
        init_matrix(attn_w1, rng);
        attn_b1.assign(cfg.attn_hidden, 0.0);
        attn_w2.assign(cfg.attn_hidden, 0.0);
        const double a = 1.0 / std::sqrt(static_cast<double>(cfg.attn_hidden));
        for (double& x : attn_w2) x = rng.uniform(-a, a);
        attn_b2 = 0.0;
        m_attn_w1 = v_attn_w1 = DenseMatrix(cfg.attn_hidden, 4 * cfg.dim);
        m_attn_b1.assign(cfg.attn_hidden, 0.0);
        v_attn_b1.assign(cfg.attn_hidden, 0.0);
        m_attn_w2.assign(cfg.attn_hidden, 0.0);
        v_attn_w2.assign(cfg.attn_hidden, 0.0);
    }

    for (const auto& wi : w) {
        mw.emplace_back(wi.rows, wi.cols);
        vw.emplace_back(wi.rows, wi.cols);
    }
    for (const auto& bi : b) {
        mb.emplace_back(bi.size(), 0.0);
        vb.emplace_back(bi.size(), 0.0);
    }
}

std::size_t MlpState::param_count() const {
    std::size_t n = 0;
    for (const auto& wi : w) n += wi.size();
    for (const auto& bi : b) n += bi.size();
    n += attn_w1.size() + attn_b1.size() + attn_w2.size();
    if (has_attention()) n += 1;  // attn_b2
    return n;
}

std::uint64_t MlpState::checksum() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& wi : w) fnv_doubles(h, wi.data.data(), wi.data.size());
    for (const auto& bi : b) fnv_doubles(h, bi.data(), bi.size());
    fnv_doubles(h, attn_w1.data.data(), attn_w1.data.size());
    fnv_doubles(h, attn_b1.data(), attn_b1.size());
    fnv_doubles(h, attn_w2.data(), attn_w2.size());
    fnv_doubles(h, &attn_b2, 1);
    return h;
}

MlpGrads::MlpGrads(const MlpState& st) {
    for (const auto& wi : st.w) gw.emplace_back(wi.size(), 0.0);
    for (const auto& bi : st.b) gb.emplace_back(bi.size(), 0.0);
    g_attn_w1.assign(st.attn_w1.size(), 0.0);
    g_attn_b1.assign(st.attn_b1.size(), 0.0);
    g_attn_w2.assign(st.attn_w2.size(), 0.0);
    g_attn_b2 = 0.0;
}

void MlpGrads::zero() {
    for (auto& g : gw) std::fill(g.begin(), g.end(), 0.0);
    for (auto& g : gb) std::fill(g.begin(), g.end(), 0.0);
    std::fill(g_attn_w1.begin(), g_attn_w1.end(), 0.0);
    std::fill(g_attn_b1.begin(), g_attn_b1.end(), 0.0);
    std::fill(g_attn_w2.begin(), g_attn_w2.end(), 0.0);
    g_attn_b2 = 0.0;
}

void MlpGrads::scale(double s) {
    const auto& k = kernels::active();
    for (auto& g : gw) k.scale(s, g.data(), g.size());
    for (auto& g : gb) k.scale(s, g.data(), g.size());
    k.scale(s, g_attn_w1.data(), g_attn_w1.size());
    k.scale(s, g_attn_b1.data(), g_attn_b1.size());
    k.scale(s, g_attn_w2.data(), g_attn_w2.size());
    g_attn_b2 *= s;
}

void dense_adam_update(MlpState& st, const MlpGrads& g, double lr, double beta1,
                       double beta2, double eps) {
    const auto& k = kernels::active();
    const std::uint64_t t = ++st.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    auto step = [&](double* p, double* m, double* v, const double* gr, std::size_t n) {
        k.adam_step(p, m, v, gr, n, lr, beta1, beta2, eps, bc1, bc2);
    };
    for (std::size_t i = 0; i < st.w.size(); ++i) {
        step(st.w[i].data.data(), st.mw[i].data.data(), st.vw[i].data.data(),
             g.gw[i].data(), st.w[i].size());
        step(st.b[i].data(), st.mb[i].data(), st.vb[i].data(), g.gb[i].data(),
             st.b[i].size());
    }
    if (st.has_attention()) {
        step(st.attn_w1.data.data(), st.m_attn_w1.data.data(),
             st.v_attn_w1.data.data(), g.g_attn_w1.data(), st.attn_w1.size());
        step(st.attn_b1.data(), st.m_attn_b1.data(), st.v_attn_b1.data(),
             g.g_attn_b1.data(), st.attn_b1.size());
        step(st.attn_w2.data(), st.m_attn_w2.data(), st.v_attn_w2.data(),
             g.g_attn_w2.data(), st.attn_w2.size());
        step(&st.attn_b2, &st.m_attn_b2, &st.v_attn_b2, &g.g_attn_b2, 1);
    }
}

int resolve_target_field(const ModelConfig& cfg,
                         const std::vector<sparsedata::FieldSchema>& schema,
                         std::size_t behavior_field) {
    if (cfg.target_field >= 0) return cfg.target_field;
    for (std::size_t f = 0; f < schema.size(); ++f)
        if (schema[f].kind == sparsedata::FieldSchema::Kind::one_hot &&
            schema[f].cardinality == schema[behavior_field].cardinality)
            return static_cast<int>(f);
    throw ConfigError("din-lite: no one-hot field matches the behavior field's "
                      "cardinality; set target_field explicitly");
}

Tape::Ref forward(const ModelConfig& cfg, const MlpState& mlp,
                  const EmbeddingState& emb, const sparsedata::Dataset& ds,
                  std::size_t example, Tape& tape, SparseGrads* row_grads,
                  MlpGrads* mlp_grads) {
    const auto& schema = ds.meta().schema;
    const std::uint32_t dim = emb.dim();
    std::vector<Tape::Ref> pooled;
    pooled.reserve(schema.size());

    auto row_grad = [&](std::size_t f, std::uint32_t id) -> double* {
        return row_grads ? row_grads->slot(static_cast<std::uint32_t>(f), id)
                         : nullptr;
    };

    for (std::size_t f = 0; f < schema.size(); ++f) {
        const auto ids = ds.field_ids(example, f);
        if (ids.empty()) {
            // empty history maps to the zero vector to keep input width fixed
            pooled.push_back(tape.value(std::vector<double>(dim, 0.0)));
            continue;
        }
        const bool multi = schema[f].kind == sparsedata::FieldSchema::Kind::multi_hot;
        if (multi && cfg.arch == ModelConfig::Arch::din_lite) {
            const int tf = resolve_target_field(cfg, schema, f);
            const auto target_ids = ds.field_ids(example, tf);
            const std::uint32_t target_id = target_ids[0];
            std::vector<const double*> rows;
            std::vector<double*> grads;
            rows.reserve(ids.size());
            for (std::uint32_t id : ids) {
                rows.push_back(emb.row(static_cast<std::uint32_t>(f), id));
                grads.push_back(row_grad(f, id));
            }
            gradcore::AttentionParams params;
            params.w1 = &mlp.attn_w1;
            params.b1 = &mlp.attn_b1;
            params.w2 = &mlp.attn_w2;
            params.b2 = mlp.attn_b2;
            if (mlp_grads) {
                params.gw1 = mlp_grads->g_attn_w1.data();
                params.gb1 = mlp_grads->g_attn_b1.data();
                params.gw2 = mlp_grads->g_attn_w2.data();
                params.gb2 = &mlp_grads->g_attn_b2;
            }
            pooled.push_back(tape.attention_pool(
                emb.row(tf, target_id), row_grad(tf, target_id), std::move(rows),
                std::move(grads), dim, params));
        } else {
            std::vector<const double*> rows;
            std::vector<double*> grads;
            rows.reserve(ids.size());
            for (std::uint32_t id : ids) {
                rows.push_back(emb.row(static_cast<std::uint32_t>(f), id));
                grads.push_back(row_grad(f, id));
            }
            const double scale =
                (multi && !cfg.sum_pool) ? 1.0 / static_cast<double>(ids.size()) : 1.0;
            pooled.push_back(
                tape.sum_pool(std::move(rows), std::move(grads), dim, scale));
        }
    }

    Tape::Ref x = tape.concat(pooled);
    for (std::size_t l = 0; l < mlp.w.size(); ++l) {
        x = tape.affine(x, mlp.w[l], mlp.b[l],
                        mlp_grads ? mlp_grads->gw[l].data() : nullptr,
                        mlp_grads ? mlp_grads->gb[l].data() : nullptr);
        if (l + 1 < mlp.w.size()) x = tape.relu(x);
    }
    return x;
}

double predict(const ModelConfig& cfg, const MlpState& mlp, const EmbeddingState& emb,
               const sparsedata::Dataset& ds, std::size_t example) {
    Tape tape;
    const Tape::Ref logit = forward(cfg, mlp, emb, ds, example, tape);
    return gradcore::sigmoid(tape.value_of(logit)[0]);
}

}  // namespace medalab::model
