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
#include "medalab/harness/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "medalab/common/rng.hpp"

namespace medalab::harness {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

void fnv_str(std::uint64_t& h, const std::string& s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
}

}  // namespace

ConfigFile ConfigFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

ConfigFile ConfigFile::parse(const std::string& text) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            cfg.sections_[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": empty key");
        cfg.sections_[section][key] = val;
    }
    return cfg;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    const auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) > 0;
}

std::string ConfigFile::get(const std::string& section, const std::string& key) const {
    const auto it = sections_.find(section);
    if (it == sections_.end() || it->second.count(key) == 0)
        throw ConfigError("missing config key [" + section + "] " + key);
    return it->second.at(key);
}

std::string ConfigFile::get_or(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    return has(section, key) ? get(section, key) : fallback;
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
    if (!has(section, key)) return fallback;
    try {
        return std::stod(get(section, key));
    } catch (const std::exception&) {
        throw ConfigError("config key [" + section + "] " + key +
                          " is not a number");
    }
}

std::uint64_t ConfigFile::get_u64(const std::string& section, const std::string& key,
                                  std::uint64_t fallback) const {
    if (!has(section, key)) return fallback;
    try {
        return std::stoull(get(section, key));
    } catch (const std::exception&) {
        throw ConfigError("config key [" + section + "] " + key +
                          " is not an integer");
    }
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get(section, key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key [" + section + "] " + key + " is not a bool");
}

std::vector<std::string> ConfigFile::get_list(const std::string& section,
                                              const std::string& key) const {
    std::vector<std::string> out;
    if (!has(section, key)) return out;
    std::istringstream ss(get(section, key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

ExperimentKind parse_experiment(const std::string& name) {
    if (name == "table1") return ExperimentKind::table1;
    if (name == "table2") return ExperimentKind::table2;
    if (name == "curves") return ExperimentKind::curves;
    if (name == "sweep") return ExperimentKind::sweep;
    throw ConfigError("unknown experiment '" + name + "'");
}

std::string experiment_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::table1: return "table1";
        case ExperimentKind::table2: return "table2";
        case ExperimentKind::curves: return "curves";
        case ExperimentKind::sweep: return "sweep";
    }
    return "?";
}

sparsedata::SyntheticConfig parse_synthetic(const ConfigFile& cfg) {
    sparsedata::SyntheticConfig syn;
    syn.seed = cfg.get_u64("data", "seed", 42);
    syn.n_examples = cfg.get_u64("data", "n_examples", 550000);
    syn.zipf_exponent = cfg.get_double("data", "zipf", 1.1);
    syn.latent_dim = static_cast<std::uint32_t>(cfg.get_u64("data", "latent_dim", 8));
    syn.noise_temp = cfg.get_double("data", "noise_temp", 0.4);
    syn.test_fraction = cfg.get_double("data", "test_fraction", 1.0 / 11.0);

    // desk-scale default: two one-hot fields plus one behavior field
    std::vector<std::string> fields = cfg.has("data", "fields")
        ? cfg.get_list("data", "fields")
        : std::vector<std::string>{"user:200000:one:1", "item:10000:one:1",
                                   "hist:10000:multi:20"};
    std::uint32_t fid = 0;
    for (const auto& f : fields) {
        std::istringstream ss(f);
        std::string name, card, kind, maxm;
        if (!std::getline(ss, name, ':') || !std::getline(ss, card, ':') ||
            !std::getline(ss, kind, ':') || !std::getline(ss, maxm))
            throw ConfigError("field spec '" + f + "' must be name:card:kind:maxmulti");
        sparsedata::FieldSchema fs;
        fs.field_id = fid++;
        fs.name = name;
        fs.cardinality = std::stoull(card);
        if (kind == "one") fs.kind = sparsedata::FieldSchema::Kind::one_hot;
        else if (kind == "multi") fs.kind = sparsedata::FieldSchema::Kind::multi_hot;
        else throw ConfigError("field kind must be one|multi in '" + f + "'");
        fs.max_multi = static_cast<std::uint32_t>(std::stoul(maxm));
        syn.schema.push_back(std::move(fs));
    }
    return syn;
}

ExperimentSpec build_spec(const ConfigFile& cfg, ExperimentKind kind,
                          const std::vector<std::uint64_t>& seed_override) {
    ExperimentSpec spec;
    spec.experiment = kind;

    auto model_names = cfg.get_list("experiment", "models");
    if (model_names.empty())
        model_names = {cfg.get_or("model", "architecture", "dnn")};
    for (const auto& name : model_names) {
        model::ModelConfig mc = model::ModelConfig::parse_arch(name);
        mc.dim = static_cast<std::uint32_t>(cfg.get_u64("model", "dim", 16));
        mc.attn_hidden =
            static_cast<std::uint32_t>(cfg.get_u64("model", "attn_hidden", 16));
        if (cfg.has("model", "hidden")) {
            mc.hidden.clear();
            for (const auto& h : cfg.get_list("model", "hidden"))
                mc.hidden.push_back(static_cast<std::uint32_t>(std::stoul(h)));
            if (mc.hidden.empty())
                throw ConfigError("hidden sizes must be non-empty");
        }
        mc.sum_pool = cfg.get_bool("model", "sum_pool", false);
        const std::string init_dist = cfg.get_or("model", "init_dist", "uniform");
        if (init_dist == "uniform")
            mc.init.dist = embedding::InitSpec::Dist::uniform;
        else if (init_dist == "normal")
            mc.init.dist = embedding::InitSpec::Dist::normal;
        else
            throw ConfigError("init_dist must be uniform|normal");
        mc.init.param = cfg.get_double("model", "init_scale", -1.0);
        if (cfg.has("model", "target_field"))
            mc.target_field = static_cast<int>(cfg.get_u64("model", "target_field", 0));
        spec.models.push_back(std::move(mc));
    }

    if (!seed_override.empty()) {
        spec.seeds = seed_override;
    } else {
        for (const auto& s : cfg.get_list("experiment", "seeds"))
            spec.seeds.push_back(std::stoull(s));
        if (spec.seeds.empty()) spec.seeds = {1};
    }

    const std::uint32_t default_cap =
        kind == ExperimentKind::table1 ? 2
        : kind == ExperimentKind::table2 ? 16
                                         : 8;
    spec.epochs_cap =
        static_cast<std::uint32_t>(cfg.get_u64("experiment", "epochs", default_cap));
    if (spec.epochs_cap < 1) throw ConfigError("epochs must be >= 1");

    if (cfg.has("experiment", "fractions")) {
        spec.fractions.clear();
        for (const auto& f : cfg.get_list("experiment", "fractions"))
            spec.fractions.push_back(std::stod(f));
    }
    if (kind == ExperimentKind::table2) {
        for (double f : {1.0, 0.5, 0.25, 0.125})
            if (std::find(spec.fractions.begin(), spec.fractions.end(), f) ==
                spec.fractions.end())
                throw ConfigError("table2 requires fractions 1.0,0.5,0.25,0.125");
    }

    spec.train.lr = cfg.get_double("train", "lr", 0.001);
    spec.train.beta1 = cfg.get_double("train", "beta1", 0.9);
    spec.train.beta2 = cfg.get_double("train", "beta2", 0.999);
    spec.train.eps = cfg.get_double("train", "eps", 1e-8);
    spec.train.batch = static_cast<std::uint32_t>(cfg.get_u64("train", "batch", 256));
    if (spec.train.batch < 1) throw ConfigError("batch must be >= 1");
    if (spec.train.lr <= 0.0) throw ConfigError("lr must be > 0");
    spec.train.shuffle = cfg.get_bool("train", "shuffle", true);
    spec.train.boundary_eval_step = static_cast<std::uint32_t>(
        cfg.get_u64("train", "boundary_eval_step", 100));
    spec.train.eval_train_cap =
        static_cast<std::uint32_t>(cfg.get_u64("train", "eval_train_cap", 50000));
    spec.train.preserve_moments_on_reinit =
        cfg.get_bool("train", "preserve_moments_on_reinit", false);
    spec.record_wall_time = cfg.get_bool("experiment", "record_wall_time", false);

    if (cfg.has("data", "path")) spec.data_path = cfg.get("data", "path");
    else spec.synthetic = parse_synthetic(cfg);
    return spec;
}

std::uint64_t spec_digest(const ExperimentSpec& spec, const model::ModelConfig& model,
                          const std::string& policy, std::uint64_t seed,
                          double fraction, std::uint64_t dataset_digest) {
    std::uint64_t h = 1469598103934665603ULL;
    fnv_str(h, experiment_name(spec.experiment));
    fnv_str(h, model.arch_name());
    for (auto hh : model.hidden) fnv_str(h, std::to_string(hh));
    fnv_str(h, std::to_string(model.dim));
    fnv_str(h, std::to_string(model.attn_hidden));
    fnv_str(h, std::to_string(model.sum_pool));
    fnv_str(h, std::to_string(static_cast<int>(model.init.dist)));
    {
        char ibuf[32];
        std::snprintf(ibuf, sizeof(ibuf), "%.17g", model.init.param);
        fnv_str(h, ibuf);
    }
    fnv_str(h, policy);
    fnv_str(h, std::to_string(seed));
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.17g", fraction);
    fnv_str(h, buf);
    std::snprintf(buf, sizeof(buf), "%.17g|%.17g|%.17g|%.17g", spec.train.lr,
                  spec.train.beta1, spec.train.beta2, spec.train.eps);
    fnv_str(h, buf);
    fnv_str(h, std::to_string(spec.train.batch));
    fnv_str(h, std::to_string(spec.train.shuffle));
    fnv_str(h, std::to_string(spec.epochs_cap));
    fnv_str(h, std::to_string(dataset_digest));
    return h;
}

}  // namespace medalab::harness
