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
#include "medalab/model/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace medalab::model {

namespace {

constexpr char kMagic[8] = {'M', 'E', 'D', 'A', 'C', 'K', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

// Checkpoints are little-endian by contract; this code assumes a
// little-endian host, which covers every target this project builds on.
template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw ParseError("truncated checkpoint");
    return v;
}

void put_doubles(std::ofstream& out, const double* p, std::size_t n) {
    out.write(reinterpret_cast<const char*>(p), n * sizeof(double));
}

void get_doubles(std::ifstream& in, double* p, std::size_t n) {
    in.read(reinterpret_cast<char*>(p), n * sizeof(double));
    if (!in) throw ParseError("truncated checkpoint");
}

void put_vec(std::ofstream& out, const std::vector<double>& v) {
    put<std::uint64_t>(out, v.size());
    put_doubles(out, v.data(), v.size());
}

std::vector<double> get_vec(std::ifstream& in) {
    std::vector<double> v(get<std::uint64_t>(in));
    get_doubles(in, v.data(), v.size());
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const embedding::EmbeddingState& emb,
                     const MlpState& mlp) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path);
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kVersion);
    put<std::uint64_t>(out, sparsedata::schema_digest(emb.schema()));
    put<std::uint32_t>(out, emb.dim());
    put<std::uint64_t>(out, emb.seed());
    put<std::uint8_t>(out, static_cast<std::uint8_t>(emb.init_spec().dist));
    put<double>(out, emb.init_spec().param);

    put<std::uint32_t>(out, static_cast<std::uint32_t>(emb.field_count()));
    for (std::uint32_t f = 0; f < emb.field_count(); ++f) {
        const auto& t = emb.table(f);
        put<std::uint64_t>(out, t.rows);
        put_doubles(out, t.data.data(), t.data.size());
        put_doubles(out, emb.moments_m(f).data.data(), emb.moments_m(f).data.size());
        put_doubles(out, emb.moments_v(f).data.data(), emb.moments_v(f).data.size());
        out.write(reinterpret_cast<const char*>(emb.row_steps(f).data()),
                  emb.row_steps(f).size() * sizeof(std::uint64_t));
    }

    put<std::uint32_t>(out, static_cast<std::uint32_t>(mlp.w.size()));
    for (std::size_t l = 0; l < mlp.w.size(); ++l) {
        put<std::uint64_t>(out, mlp.w[l].rows);
        put<std::uint64_t>(out, mlp.w[l].cols);
        put_doubles(out, mlp.w[l].data.data(), mlp.w[l].data.size());
        put_vec(out, mlp.b[l]);
        put_doubles(out, mlp.mw[l].data.data(), mlp.mw[l].data.size());
        put_doubles(out, mlp.vw[l].data.data(), mlp.vw[l].data.size());
        put_vec(out, mlp.mb[l]);
        put_vec(out, mlp.vb[l]);
    }
    put<std::uint8_t>(out, mlp.has_attention() ? 1 : 0);
    if (mlp.has_attention()) {
        put<std::uint64_t>(out, mlp.attn_w1.rows);
        put<std::uint64_t>(out, mlp.attn_w1.cols);
        put_doubles(out, mlp.attn_w1.data.data(), mlp.attn_w1.data.size());
        put_vec(out, mlp.attn_b1);
        put_vec(out, mlp.attn_w2);
        put<double>(out, mlp.attn_b2);
        put_doubles(out, mlp.m_attn_w1.data.data(), mlp.m_attn_w1.data.size());
        put_doubles(out, mlp.v_attn_w1.data.data(), mlp.v_attn_w1.data.size());
        put_vec(out, mlp.m_attn_b1);
        put_vec(out, mlp.v_attn_b1);
        put_vec(out, mlp.m_attn_w2);
        put_vec(out, mlp.v_attn_w2);
        put<double>(out, mlp.m_attn_b2);
        put<double>(out, mlp.v_attn_b2);
    }
    put<std::uint64_t>(out, mlp.step);
}

Checkpoint load_checkpoint(const std::string& path,
                           const std::vector<sparsedata::FieldSchema>& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw ParseError("bad checkpoint magic in " + path);
    if (get<std::uint32_t>(in) != kVersion)
        throw ParseError("unsupported checkpoint version");
    const auto digest = get<std::uint64_t>(in);
    if (digest != sparsedata::schema_digest(schema))
        throw SchemaViolation("checkpoint schema digest mismatch");
    const auto dim = get<std::uint32_t>(in);
    const auto seed = get<std::uint64_t>(in);
    embedding::InitSpec spec;
    spec.dist = static_cast<embedding::InitSpec::Dist>(get<std::uint8_t>(in));
    spec.param = get<double>(in);

    Checkpoint ck;
    ck.emb = embedding::EmbeddingState(schema, dim, spec, seed, 0);
    const auto fields = get<std::uint32_t>(in);
    if (fields != schema.size()) throw ParseError("field count mismatch");
    for (std::uint32_t f = 0; f < fields; ++f) {
        const auto rows = get<std::uint64_t>(in);
        if (rows != schema[f].cardinality) throw ParseError("table row mismatch");
        get_doubles(in, ck.emb.table_mut(f).data.data(), rows * dim);
        get_doubles(in, ck.emb.moments_m_mut(f).data.data(), rows * dim);
        get_doubles(in, ck.emb.moments_v_mut(f).data.data(), rows * dim);
        in.read(reinterpret_cast<char*>(ck.emb.row_steps_mut(f).data()),
                rows * sizeof(std::uint64_t));
        if (!in) throw ParseError("truncated checkpoint");
    }

    const auto layers = get<std::uint32_t>(in);
    MlpState& mlp = ck.mlp;
    for (std::uint32_t l = 0; l < layers; ++l) {
        const auto r = get<std::uint64_t>(in);
        const auto c = get<std::uint64_t>(in);
        gradcore::DenseMatrix w(r, c);
        get_doubles(in, w.data.data(), w.data.size());
        mlp.w.push_back(std::move(w));
        mlp.b.push_back(get_vec(in));
        gradcore::DenseMatrix mw(r, c), vw(r, c);
        get_doubles(in, mw.data.data(), mw.data.size());
        get_doubles(in, vw.data.data(), vw.data.size());
        mlp.mw.push_back(std::move(mw));
        mlp.vw.push_back(std::move(vw));
        mlp.mb.push_back(get_vec(in));
        mlp.vb.push_back(get_vec(in));
    }
    if (get<std::uint8_t>(in) != 0) {
        const auto r = get<std::uint64_t>(in);
        const auto c = get<std::uint64_t>(in);
        mlp.attn_w1 = gradcore::DenseMatrix(r, c);
        get_doubles(in, mlp.attn_w1.data.data(), mlp.attn_w1.data.size());
        mlp.attn_b1 = get_vec(in);
        mlp.attn_w2 = get_vec(in);
        mlp.attn_b2 = get<double>(in);
        mlp.m_attn_w1 = gradcore::DenseMatrix(r, c);
        mlp.v_attn_w1 = gradcore::DenseMatrix(r, c);
        get_doubles(in, mlp.m_attn_w1.data.data(), mlp.m_attn_w1.data.size());
        get_doubles(in, mlp.v_attn_w1.data.data(), mlp.v_attn_w1.data.size());
        mlp.m_attn_b1 = get_vec(in);
        mlp.v_attn_b1 = get_vec(in);
        mlp.m_attn_w2 = get_vec(in);
        mlp.v_attn_w2 = get_vec(in);
        mlp.m_attn_b2 = get<double>(in);
        mlp.v_attn_b2 = get<double>(in);
    }
    mlp.step = get<std::uint64_t>(in);
    return ck;
}

}  // namespace medalab::model
