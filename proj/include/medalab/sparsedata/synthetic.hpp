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
#include <string>
#include <vector>

#include "medalab/sparsedata/dataset.hpp"

namespace medalab::sparsedata {

// Synthetic sparse CTR data with a fixed hidden ground truth:
// ids are drawn Zipf(s) per field; each id owns a latent vector drawn
// once from N(0, 1/sqrt(d)) entries; the true logit is
// (1/tau) * dot(mean of per-field latents, hidden weight vector) and the
// label is Bernoulli(sigmoid(true logit)). Identical seeds give
// byte-identical output files.
struct SyntheticConfig {
    std::uint64_t seed = 1;
    std::uint64_t n_examples = 0;   // total; last test_fraction of them form the test split
    std::vector<FieldSchema> schema;
    double zipf_exponent = 1.1;     // s >= 0; s = 0 is uniform
    std::uint32_t latent_dim = 8;   // d
    double noise_temp = 0.4;        // tau
    double test_fraction = 0.1;
};

struct SyntheticResult {
    Dataset train;
    Dataset test;
    // True logits aligned with train/test examples; used by calibration
    // checks, not written to disk.
    std::vector<double> train_logits;
    std::vector<double> test_logits;
};

// Generates in memory. Validation failures throw ConfigError.
SyntheticResult generate_synthetic(const SyntheticConfig& cfg);

// Generates and writes <out_dir>/train.txt(.meta) and test.txt(.meta).
void generate_synthetic_files(const SyntheticConfig& cfg, const std::string& out_dir);

// Zipf(s) sampler over [0, n): P(i) proportional to 1/(i+1)^s.
class ZipfSampler {
  public:
    ZipfSampler(std::uint64_t n, double s);
    std::uint64_t sample(double unit) const;  // unit in [0,1)
    double pmf(std::uint64_t i) const;

  private:
    std::vector<double> cdf_;
};

}  // namespace medalab::sparsedata
