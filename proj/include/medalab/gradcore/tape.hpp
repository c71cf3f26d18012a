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
#include <cstdint>
#include <vector>

#include "medalab/gradcore/matrix.hpp"

namespace medalab::gradcore {

// Elementwise helpers shared with the rest of the engine.
void affine_forward(const DenseMatrix& w, const double* x, const double* b,
                    double* y);
double sigmoid(double logit);
// Returns (p, loss) for a single logit/label pair, loss in the stable
// softplus form: loss = softplus(logit) - label*logit.
struct SigmoidBce {
    double p;
    double loss;
};
SigmoidBce sigmoid_bce(double logit, double label);

enum class OpKind : std::uint8_t {
    affine,
    relu,
    sigmoid,
    concat,
    sum_pool,
    attention_pool,
    bce_loss,
};

// Scorer parameters for the attention pooling head, with external
// gradient accumulation targets. Gradients are summed into the g* arrays;
// the caller owns zeroing them between optimizer steps.
struct AttentionParams {
    const DenseMatrix* w1 = nullptr;       // hidden x 4D
    const std::vector<double>* b1 = nullptr;
    const std::vector<double>* w2 = nullptr;  // hidden
    double b2 = 0.0;
    double* gw1 = nullptr;
    double* gb1 = nullptr;
    double* gw2 = nullptr;
    double* gb2 = nullptr;
};

// Records the fixed computation graph of one forward pass and replays it
// in exact reverse order for gradients. Only the seven op kinds above
// exist; this is deliberately not a general autodiff engine.
//
// Parameter and embedding-row gradients accumulate into caller-owned
// buffers, so one tape per example composes naturally into minibatch
// accumulation.
class Tape {
  public:
    using Ref = std::uint32_t;

    // Constant input vector (no gradient tracked past it).
    Ref value(std::vector<double> v);

    // y = W x + b. gw/gb may be null to skip parameter gradients.
    Ref affine(Ref x, const DenseMatrix& w, const std::vector<double>& b,
               double* gw, double* gb);
    Ref relu(Ref x);
    Ref sigmoid_node(Ref x);
    Ref concat(const std::vector<Ref>& parts);

    // out = scale * sum(rows). Each row may carry an external gradient
    // target (nullptr rows are treated as constants). Mean pooling is
    // scale = 1/k, sum pooling scale = 1.
    Ref sum_pool(std::vector<const double*> rows, std::vector<double*> row_grads,
                 std::size_t dim, double scale);

    // Softmax-weighted pooling of behaviors scored against the target.
    Ref attention_pool(const double* target, double* target_grad,
                       std::vector<const double*> behaviors,
                       std::vector<double*> behavior_grads, std::size_t dim,
                       const AttentionParams& params);

    // Terminal scalar loss; must be last. x must be 1-dimensional.
    Ref bce_loss(Ref logit, double label);

    const std::vector<double>& value_of(Ref r) const;
    double loss() const;
    double prob() const;

    // Seeds dL/dloss = 1 at the loss node and sweeps backward. Throws
    // StateError when no loss node was recorded.
    void backward();

    void reset();

  private:
    struct Node {
        OpKind kind;
        std::vector<double> out;
        std::vector<double> grad;
        Ref a = 0;
        std::vector<Ref> inputs;        // concat
        const DenseMatrix* w = nullptr; // affine / attention scorer
        const std::vector<double>* b = nullptr;
        double* gw = nullptr;
        double* gb = nullptr;
        std::vector<const double*> rows;
        std::vector<double*> row_grads;
        double scale = 1.0;
        const double* target = nullptr;
        double* target_grad = nullptr;
        AttentionParams attn;
        std::vector<double> attn_pre;     // K x hidden, pre-ReLU scorer activations
        std::vector<double> attn_weights; // softmax weights, length K
        double label = 0.0;
        double p = 0.0;
        double loss_val = 0.0;
    };

    Ref push(Node n);
    void backward_node(Node& n);

    std::vector<Node> nodes_;
    int loss_node_ = -1;
};

}  // namespace medalab::gradcore
