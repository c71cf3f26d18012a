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

#include <iosfwd>
#include <string>

#include "medalab/harness/config.hpp"

namespace medalab::harness {

// Runs every (model, policy, seed, fraction) cell of the experiment into
// out_dir/cells/. Cells whose output already exists with a matching spec
// digest are skipped, so interrupted experiments resume. parallel > 1
// runs independent cells in that many worker threads.
void run_experiment(const ExperimentSpec& spec, const std::string& out_dir,
                    unsigned parallel = 1);

// Aggregates completed cell files under dir and prints the experiment's
// summary table(s); also writes <dir>/report_<experiment>.csv.
void report(const std::string& dir, std::ostream& out);

// Ensures the dataset for the spec exists and is loaded; synthetic data
// is generated into <out_dir>/data once and reused.
struct LoadedData {
    sparsedata::Dataset train;
    sparsedata::Dataset test;
};
LoadedData load_or_generate_data(const ExperimentSpec& spec,
                                 const std::string& out_dir);

}  // namespace medalab::harness
