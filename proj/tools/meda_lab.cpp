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
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "medalab/harness/experiment.hpp"

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        auto comma = csv.find(',', pos);
        if (comma == std::string::npos) comma = csv.size();
        seeds.push_back(std::stoull(csv.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Epoch-policy experiment harness for sparse CTR models"};
    app.require_subcommand(1);

    std::string config_path, out_dir, in_dir, experiment, seeds_csv;
    unsigned parallel = 1;

    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    gen->add_option("--config", config_path, "config file")->required();
    gen->add_option("--out", out_dir, "output directory")->required();

    auto* run = app.add_subcommand("run", "run a named experiment");
    run->add_option("--experiment", experiment, "table1|table2|curves|sweep")
        ->required();
    run->add_option("--config", config_path, "config file")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--seeds", seeds_csv, "comma-separated seed override");
    run->add_option("--parallel", parallel, "worker threads for independent cells");

    auto* rep = app.add_subcommand("report", "aggregate completed cells");
    rep->add_option("--in", in_dir, "experiment output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const auto cfg = medalab::harness::ConfigFile::load(config_path);
            medalab::sparsedata::generate_synthetic_files(
                medalab::harness::parse_synthetic(cfg), out_dir);
            std::cout << "wrote " << out_dir << "/train.txt and test.txt\n";
        } else if (run->parsed()) {
            const auto cfg = medalab::harness::ConfigFile::load(config_path);
            const auto kind = medalab::harness::parse_experiment(experiment);
            const auto spec = medalab::harness::build_spec(
                cfg, kind, seeds_csv.empty() ? std::vector<std::uint64_t>{}
                                             : parse_seeds(seeds_csv));
            medalab::harness::run_experiment(spec, out_dir, parallel);
            std::cout << "experiment " << experiment << " complete; results in "
                      << out_dir << "\n";
        } else if (rep->parsed()) {
            medalab::harness::report(in_dir, std::cout);
        }
    } catch (const medalab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const medalab::DivergedRun& e) {
        std::cerr << "diverged run: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
