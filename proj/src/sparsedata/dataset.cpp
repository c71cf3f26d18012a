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
#include "medalab/sparsedata/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "medalab/common/rng.hpp"

namespace medalab::sparsedata {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_bytes(std::uint64_t& h, const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= kFnvPrime;
    }
}

template <typename T>
void fnv_value(std::uint64_t& h, T v) {
    fnv_bytes(h, &v, sizeof(v));
}

std::uint64_t parse_u64(std::string_view sv, std::size_t line_no, const char* what) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (ec != std::errc() || ptr != sv.data() + sv.size())
        throw ParseError(std::string("bad ") + what + " '" + std::string(sv) + "'",
                         line_no);
    return v;
}

}  // namespace

std::uint64_t schema_digest(const std::vector<FieldSchema>& schema) {
    std::uint64_t h = kFnvOffset;
    for (const auto& f : schema) {
        fnv_value(h, f.field_id);
        fnv_bytes(h, f.name.data(), f.name.size());
        fnv_value(h, f.cardinality);
        fnv_value(h, static_cast<std::uint32_t>(f.kind));
        fnv_value(h, f.max_multi);
    }
    return h;
}

void Dataset::append(std::uint8_t label,
                     const std::vector<std::vector<std::uint32_t>>& per_field_ids) {
    if (per_field_ids.size() != meta_.schema.size())
        throw SchemaViolation("example has " + std::to_string(per_field_ids.size()) +
                              " fields, schema has " +
                              std::to_string(meta_.schema.size()));
    for (std::size_t f = 0; f < per_field_ids.size(); ++f) {
        const auto& fs = meta_.schema[f];
        const auto& ids = per_field_ids[f];
        if (fs.kind == FieldSchema::Kind::one_hot && ids.size() != 1)
            throw SchemaViolation("field " + std::to_string(f) +
                                  ": one-hot field needs exactly 1 id");
        if (fs.kind == FieldSchema::Kind::multi_hot &&
            (ids.empty() || ids.size() > fs.max_multi))
            throw SchemaViolation("field " + std::to_string(f) +
                                  ": multi-hot id count out of 1..max-multi");
        for (std::uint32_t id : ids)
            if (id >= fs.cardinality)
                throw SchemaViolation("field " + std::to_string(f) + ": id " +
                                      std::to_string(id) + " >= cardinality " +
                                      std::to_string(fs.cardinality));
    }
    labels_.push_back(label);
    for (const auto& ids : per_field_ids) {
        ids_.insert(ids_.end(), ids.begin(), ids.end());
        offsets_.push_back(ids_.size());
    }
    meta_.example_count = labels_.size();
}

std::uint64_t Dataset::schema_digest() const {
    return sparsedata::schema_digest(meta_.schema);
}

std::uint64_t Dataset::content_digest() const {
    std::uint64_t h = schema_digest();
    fnv_bytes(h, labels_.data(), labels_.size());
    fnv_bytes(h, ids_.data(), ids_.size() * sizeof(std::uint32_t));
    fnv_bytes(h, offsets_.data(), offsets_.size() * sizeof(std::uint64_t));
    return h;
}

Dataset parse_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);

    DatasetMeta meta;
    Dataset* ds = nullptr;
    Dataset result;
    bool in_header = true;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::vector<std::uint32_t>> fields;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("#field ", 0) == 0) {
                if (!in_header)
                    throw ParseError("#field header after data lines", line_no);
                std::istringstream ss(line.substr(7));
                FieldSchema fs;
                std::string kind;
                std::uint64_t fid = 0;
                if (!(ss >> fid >> fs.name >> fs.cardinality >> kind >> fs.max_multi))
                    throw ParseError("malformed #field header", line_no);
                fs.field_id = static_cast<std::uint32_t>(fid);
                if (fid != meta.schema.size())
                    throw ParseError("#field ids must be dense and ascending", line_no);
                if (kind == "one")
                    fs.kind = FieldSchema::Kind::one_hot;
                else if (kind == "multi")
                    fs.kind = FieldSchema::Kind::multi_hot;
                else
                    throw ParseError("field kind must be 'one' or 'multi'", line_no);
                if (fs.cardinality < 1)
                    throw ParseError("cardinality must be >= 1", line_no);
                meta.schema.push_back(std::move(fs));
            }
            continue;  // other # lines are comments
        }

        if (in_header) {
            if (meta.schema.empty())
                throw ParseError("data line before any #field header", line_no);
            result = Dataset(meta);
            ds = &result;
            in_header = false;
        }

        std::string_view sv(line);
        const auto sp = sv.find(' ');
        if (sp == std::string_view::npos)
            throw ParseError("expected '<label> <field>:<ids>...'", line_no);
        const std::uint64_t label = parse_u64(sv.substr(0, sp), line_no, "label");
        if (label > 1) throw ParseError("label must be 0 or 1", line_no);

        fields.assign(meta.schema.size(), {});
        std::size_t expected_field = 0;
        std::size_t pos = sp + 1;
        while (pos < sv.size()) {
            std::size_t end = sv.find(' ', pos);
            if (end == std::string_view::npos) end = sv.size();
            const std::string_view tok = sv.substr(pos, end - pos);
            pos = end + 1;
            if (tok.empty()) continue;
            const auto colon = tok.find(':');
            if (colon == std::string_view::npos)
                throw ParseError("token '" + std::string(tok) + "' missing ':'",
                                 line_no);
            const std::uint64_t f = parse_u64(tok.substr(0, colon), line_no, "field id");
            if (f != expected_field)
                throw ParseError("fields must appear once each in ascending order "
                                 "(got field " + std::to_string(f) + ")",
                                 line_no);
            if (f >= meta.schema.size())
                throw ParseError("field " + std::to_string(f) + " not in schema",
                                 line_no);
            std::string_view idlist = tok.substr(colon + 1);
            if (idlist.empty())
                throw ParseError("empty id list for field " + std::to_string(f),
                                 line_no);
            std::unordered_set<std::uint32_t> seen;
            std::size_t ip = 0;
            while (ip <= idlist.size()) {
                std::size_t ie = idlist.find(',', ip);
                if (ie == std::string_view::npos) ie = idlist.size();
                const std::string_view idtok = idlist.substr(ip, ie - ip);
                if (idtok.empty()) throw ParseError("empty id", line_no);
                const std::uint64_t id = parse_u64(idtok, line_no, "id");
                if (id >= meta.schema[f].cardinality)
                    throw SchemaViolation("line " + std::to_string(line_no) +
                                          ": id " + std::to_string(id) +
                                          " >= cardinality " +
                                          std::to_string(meta.schema[f].cardinality) +
                                          " in field " + std::to_string(f));
                if (!seen.insert(static_cast<std::uint32_t>(id)).second)
                    throw ParseError("duplicate id " + std::to_string(id) +
                                     " in field " + std::to_string(f), line_no);
                fields[f].push_back(static_cast<std::uint32_t>(id));
                if (ie == idlist.size()) break;
                ip = ie + 1;
            }
            ++expected_field;
        }
        if (expected_field != meta.schema.size())
            throw ParseError("example lists " + std::to_string(expected_field) +
                             " of " + std::to_string(meta.schema.size()) + " fields",
                             line_no);
        try {
            ds->append(static_cast<std::uint8_t>(label), fields);
        } catch (const SchemaViolation& e) {
            throw SchemaViolation("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (in_header) {
        // header-only file: empty dataset with schema
        result = Dataset(meta);
    }

    // Optional sidecar.
    std::ifstream metaf(path + ".meta");
    if (metaf) {
        DatasetMeta m = result.meta();
        std::string mline;
        while (std::getline(metaf, mline)) {
            const auto eq = mline.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = mline.substr(0, eq);
            const std::string val = mline.substr(eq + 1);
            if (key == "seed") m.generator_seed = std::stoull(val);
            else if (key == "provenance")
                m.provenance = (val == "synthetic") ? Provenance::synthetic
                                                    : Provenance::imported;
            else if (key == "example_count") {
                if (std::stoull(val) != result.size())
                    throw ParseError("sidecar example_count " + val +
                                     " does not match data line count " +
                                     std::to_string(result.size()));
            } else {
                m.extra.emplace_back(key, val);
            }
        }
        m.example_count = result.size();
        result.set_meta(std::move(m));
    }
    return result;
}

void serialize_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary: fixed \n endings
    if (!out) throw ParseError("cannot write " + path);
    const auto& schema = ds.meta().schema;
    for (const auto& f : schema)
        out << "#field " << f.field_id << ' ' << f.name << ' ' << f.cardinality << ' '
            << (f.kind == FieldSchema::Kind::one_hot ? "one" : "multi") << ' '
            << f.max_multi << '\n';
    std::string line;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        line.clear();
        line += ds.label(i) ? '1' : '0';
        for (std::size_t f = 0; f < schema.size(); ++f) {
            line += ' ';
            line += std::to_string(f);
            line += ':';
            const auto ids = ds.field_ids(i, f);
            for (std::size_t j = 0; j < ids.size(); ++j) {
                if (j) line += ',';
                line += std::to_string(ids[j]);
            }
        }
        line += '\n';
        out << line;
    }
    out.close();

    std::ofstream metaf(path + ".meta", std::ios::binary);
    metaf << "example_count=" << ds.size() << '\n';
    metaf << "provenance="
          << (ds.meta().provenance == Provenance::synthetic ? "synthetic" : "imported")
          << '\n';
    if (ds.meta().generator_seed)
        metaf << "seed=" << *ds.meta().generator_seed << '\n';
    for (const auto& [key, val] : ds.meta().extra) metaf << key << '=' << val << '\n';
}

Dataset subsample(const Dataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw ConfigError("subsample fraction must be in (0, 1]");
    DatasetMeta meta = ds.meta();
    Dataset out(meta);
    std::vector<std::vector<std::uint32_t>> fields(ds.field_count());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::uint64_t h = hash_combine(hash_combine(seed, 0x5ABB5A3Du), i);
        const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
        if (u >= fraction) continue;
        for (std::size_t f = 0; f < ds.field_count(); ++f) {
            const auto ids = ds.field_ids(i, f);
            fields[f].assign(ids.begin(), ids.end());
        }
        out.append(ds.label(i), fields);
    }
    if (out.size() == 0) throw DegenerateDataset("subsample produced no examples");
    return out;
}

std::vector<std::uint32_t> epoch_shuffle(std::size_t n, std::uint32_t epoch_index,
                                         std::uint64_t seed) {
    std::vector<std::uint32_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);
    Rng rng(hash_combine(hash_combine(seed, 0x5871FF1Eu), epoch_index));
    for (std::size_t i = n; i > 1; --i)
        std::swap(perm[i - 1], perm[rng.next_below(i)]);
    return perm;
}

double low_occurrence_fraction(const Dataset& ds, std::uint64_t k) {
    std::unordered_map<std::uint64_t, std::uint64_t> counts;
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t f = 0; f < ds.field_count(); ++f)
            for (std::uint32_t id : ds.field_ids(i, f))
                ++counts[(static_cast<std::uint64_t>(f) << 32) | id];
    if (counts.empty()) return 0.0;
    std::uint64_t low = 0;
    for (const auto& [key, c] : counts)
        if (c < k) ++low;
    return static_cast<double>(low) / static_cast<double>(counts.size());
}

}  // namespace medalab::sparsedata
