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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace medalab {

struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file; carries the 1-based line number when known.
struct ParseError : std::runtime_error {
    std::size_t line = 0;
    ParseError(const std::string& msg, std::size_t line_no)
        : std::runtime_error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// An id fell outside its field's cardinality, or an example does not
// match the declared schema.
struct SchemaViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training hit a non-finite batch loss; carries the global step index.
struct DivergedRun : std::runtime_error {
    std::size_t step;
    DivergedRun(std::size_t step_idx)
        : std::runtime_error("non-finite loss at step " + std::to_string(step_idx)),
          step(step_idx) {}
};

struct StateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Metric is undefined on the given input (e.g. AUC with a single class).
struct UndefinedMetric : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Subsampling or filtering left no examples.
struct DegenerateDataset : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace medalab
