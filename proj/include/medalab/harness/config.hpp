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
#include <map>
#include <string>
#include <vector>

#include "medalab/common/errors.hpp"
#include "medalab/model/model.hpp"
#include "medalab/sparsedata/synthetic.hpp"
#include "medalab/training/trainer.hpp"

namespace medalab::harness {

// key = value lines grouped under bracketed [section] headers; '#' starts
// a comment.
class ConfigFile {
  public:
    static ConfigFile load(const std::string& path);
    static ConfigFile parse(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key,
                      double fallback) const;
    std::uint64_t get_u64(const std::string& section, const std::string& key,
                          std::uint64_t fallback) const;
    bool get_bool(const std::string& section, const std::string& key,
                  bool fallback) const;
    std::vector<std::string> get_list(const std::string& section,
                                      const std::string& key) const;

    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return sections_;
    }

  private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

enum class ExperimentKind { table1, table2, curves, sweep };
ExperimentKind parse_experiment(const std::string& name);
std::string experiment_name(ExperimentKind k);

struct ExperimentSpec {
    ExperimentKind experiment = ExperimentKind::table1;
    std::vector<model::ModelConfig> models;
    std::vector<std::uint64_t> seeds;
    std::uint32_t epochs_cap = 2;
    std::vector<double> fractions = {1.0, 0.5, 0.25, 0.125};  // table2
    training::TrainConfig train;
    // Either a directory with pre-generated train.txt/test.txt ...
    std::string data_path;
    // ... or a synthetic config (used when data_path is empty).
    sparsedata::SyntheticConfig synthetic;
    bool record_wall_time = false;  // keep measured wall seconds in the CSVs
};

// Assembles the spec from a config file; --seeds overrides when non-empty.
ExperimentSpec build_spec(const ConfigFile& cfg, ExperimentKind kind,
                          const std::vector<std::uint64_t>& seed_override);

// The [data] section: either `path = dir` or inline synthetic fields
// (`seed`, `n_examples`, `fields = name:card:one|multi:maxmulti,...`,
// `zipf`, `latent_dim`, `noise_temp`, `test_fraction`).
sparsedata::SyntheticConfig parse_synthetic(const ConfigFile& cfg);

// Stable digest of everything that determines a cell's output.
std::uint64_t spec_digest(const ExperimentSpec& spec, const model::ModelConfig& model,
                          const std::string& policy, std::uint64_t seed,
                          double fraction, std::uint64_t dataset_digest);

}  // namespace medalab::harness
