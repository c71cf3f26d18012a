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
#include "medalab/gradcore/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "medalab/kernels/kernels.hpp"

namespace medalab::gradcore {

namespace k = medalab::kernels;

void affine_forward(const DenseMatrix& w, const double* x, const double* b,
                    double* y) {
    k::active().gemv(w.data.data(), x, b, y, w.rows, w.cols);
}

double sigmoid(double logit) { return 1.0 / (1.0 + std::exp(-logit)); }

SigmoidBce sigmoid_bce(double logit, double label) {
    // softplus(x) = log1p(exp(-|x|)) + max(x, 0); never evaluates log(0).
    const double softplus = std::log1p(std::exp(-std::abs(logit))) + std::max(logit, 0.0);
    return SigmoidBce{sigmoid(logit), softplus - label * logit};
}

Tape::Ref Tape::push(Node n) {
    n.grad.assign(n.out.size(), 0.0);
    nodes_.push_back(std::move(n));
    return static_cast<Ref>(nodes_.size() - 1);
}

Tape::Ref Tape::value(std::vector<double> v) {
    Node n;
    n.kind = OpKind::concat;  // leaf; concat with no inputs is inert in backward
    n.out = std::move(v);
    return push(std::move(n));
}

Tape::Ref Tape::affine(Ref x, const DenseMatrix& w, const std::vector<double>& b,
                       double* gw, double* gb) {
    const auto& xin = nodes_[x].out;
    if (w.cols != xin.size() || w.rows != b.size())
        throw DimensionError("affine: shape mismatch (" + std::to_string(w.rows) +
                             "x" + std::to_string(w.cols) + " vs input " +
                             std::to_string(xin.size()) + ", bias " +
                             std::to_string(b.size()) + ")");
    Node n;
    n.kind = OpKind::affine;
    n.a = x;
    n.w = &w;
    n.b = &b;
    n.gw = gw;
    n.gb = gb;
    n.out.resize(w.rows);
    affine_forward(w, xin.data(), b.data(), n.out.data());
    return push(std::move(n));
}

Tape::Ref Tape::relu(Ref x) {
    Node n;
    n.kind = OpKind::relu;
    n.a = x;
    n.out = nodes_[x].out;
    for (double& v : n.out) v = std::max(v, 0.0);
    return push(std::move(n));
}

Tape::Ref Tape::sigmoid_node(Ref x) {
    Node n;
    n.kind = OpKind::sigmoid;
    n.a = x;
    n.out = nodes_[x].out;
    for (double& v : n.out) v = sigmoid(v);
    return push(std::move(n));
}

Tape::Ref Tape::concat(const std::vector<Ref>& parts) {
    Node n;
    n.kind = OpKind::concat;
    n.inputs = parts;
    std::size_t total = 0;
    for (Ref r : parts) total += nodes_[r].out.size();
    n.out.reserve(total);
    for (Ref r : parts)
        n.out.insert(n.out.end(), nodes_[r].out.begin(), nodes_[r].out.end());
    return push(std::move(n));
}

Tape::Ref Tape::sum_pool(std::vector<const double*> rows,
                         std::vector<double*> row_grads, std::size_t dim,
                         double scale) {
    Node n;
    n.kind = OpKind::sum_pool;
    n.out.assign(dim, 0.0);
    for (const double* r : rows) k::active().axpy(1.0, r, n.out.data(), dim);
    k::active().scale(scale, n.out.data(), dim);
    n.rows = std::move(rows);
    n.row_grads = std::move(row_grads);
    n.scale = scale;
    return push(std::move(n));
}

Tape::Ref Tape::attention_pool(const double* target, double* target_grad,
                               std::vector<const double*> behaviors,
                               std::vector<double*> behavior_grads,
                               std::size_t dim, const AttentionParams& params) {
    if (behaviors.empty())
        throw DegenerateInput("attention_pool: empty behavior list");
    const std::size_t kcount = behaviors.size();
    const std::size_t hidden = params.w1->rows;
    if (params.w1->cols != 4 * dim)
        throw DimensionError("attention_pool: scorer expects 4*D inputs");

    Node n;
    n.kind = OpKind::attention_pool;
    n.target = target;
    n.target_grad = target_grad;
    n.attn = params;
    n.attn_pre.resize(kcount * hidden);
    n.attn_weights.resize(kcount);

    std::vector<double> z(4 * dim);
    std::vector<double> h(hidden);
    std::vector<double> scores(kcount);
    for (std::size_t kk = 0; kk < kcount; ++kk) {
        const double* e = behaviors[kk];
        for (std::size_t j = 0; j < dim; ++j) {
            z[j] = e[j];
            z[dim + j] = target[j];
            z[2 * dim + j] = e[j] * target[j];
            z[3 * dim + j] = e[j] - target[j];
        }
        double* pre = n.attn_pre.data() + kk * hidden;
        k::active().gemv(params.w1->data.data(), z.data(), params.b1->data(), pre,
                         hidden, 4 * dim);
        for (std::size_t j = 0; j < hidden; ++j) h[j] = std::max(pre[j], 0.0);
        scores[kk] = params.b2 + k::active().dot(params.w2->data(), h.data(), hidden);
    }

    const double smax = *std::max_element(scores.begin(), scores.end());
    double denom = 0.0;
    for (std::size_t kk = 0; kk < kcount; ++kk) {
        n.attn_weights[kk] = std::exp(scores[kk] - smax);
        denom += n.attn_weights[kk];
    }
    for (double& wv : n.attn_weights) wv /= denom;

    n.out.assign(dim, 0.0);
    for (std::size_t kk = 0; kk < kcount; ++kk)
        k::active().axpy(n.attn_weights[kk], behaviors[kk], n.out.data(), dim);

    n.rows = std::move(behaviors);
    n.row_grads = std::move(behavior_grads);
    return push(std::move(n));
}

Tape::Ref Tape::bce_loss(Ref logit, double label) {
    const auto& in = nodes_[logit].out;
    if (in.size() != 1) throw DimensionError("bce_loss: logit must be scalar");
    Node n;
    n.kind = OpKind::bce_loss;
    n.a = logit;
    n.label = label;
    const SigmoidBce r = sigmoid_bce(in[0], label);
    n.p = r.p;
    n.loss_val = r.loss;
    n.out = {r.loss};
    Ref ref = push(std::move(n));
    loss_node_ = static_cast<int>(ref);
    return ref;
}

const std::vector<double>& Tape::value_of(Ref r) const { return nodes_[r].out; }

double Tape::loss() const {
    if (loss_node_ < 0) throw StateError("loss() before bce_loss was recorded");
    return nodes_[loss_node_].loss_val;
}

double Tape::prob() const {
    if (loss_node_ < 0) throw StateError("prob() before bce_loss was recorded");
    return nodes_[loss_node_].p;
}

void Tape::backward_node(Node& n) {
    switch (n.kind) {
        case OpKind::bce_loss: {
            // d loss / d logit = p - y
            nodes_[n.a].grad[0] += n.grad[0] * (n.p - n.label);
            break;
        }
        case OpKind::sigmoid: {
            auto& gin = nodes_[n.a].grad;
            for (std::size_t i = 0; i < n.out.size(); ++i)
                gin[i] += n.grad[i] * n.out[i] * (1.0 - n.out[i]);
            break;
        }
        case OpKind::relu: {
            auto& gin = nodes_[n.a].grad;
            const auto& xin = nodes_[n.a].out;
            for (std::size_t i = 0; i < n.out.size(); ++i)
                if (xin[i] > 0.0) gin[i] += n.grad[i];
            break;
        }
        case OpKind::affine: {
            auto& child = nodes_[n.a];
            const std::size_t m = n.w->rows;
            const std::size_t cols = n.w->cols;
            if (n.gw) k::active().ger_acc(n.grad.data(), child.out.data(), n.gw, m, cols);
            if (n.gb) k::active().axpy(1.0, n.grad.data(), n.gb, m);
            k::active().gemv_t_acc(n.w->data.data(), n.grad.data(),
                                   child.grad.data(), m, cols);
            break;
        }
        case OpKind::concat: {
            std::size_t off = 0;
            for (Ref r : n.inputs) {
                auto& child = nodes_[r];
                k::active().axpy(1.0, n.grad.data() + off, child.grad.data(),
                                 child.out.size());
                off += child.out.size();
            }
            break;
        }
        case OpKind::sum_pool: {
            const std::size_t dim = n.out.size();
            for (double* g : n.row_grads)
                if (g) k::active().axpy(n.scale, n.grad.data(), g, dim);
            break;
        }
        case OpKind::attention_pool: {
            const std::size_t dim = n.out.size();
            const std::size_t kcount = n.rows.size();
            const std::size_t hidden = n.attn.w1->rows;
            const double* g = n.grad.data();

            // Direct path: d out / d e_k = w_k * I.
            for (std::size_t kk = 0; kk < kcount; ++kk)
                if (n.row_grads[kk])
                    k::active().axpy(n.attn_weights[kk], g, n.row_grads[kk], dim);

            // Softmax path.
            std::vector<double> dw(kcount);  // dL/d weight_k
            double wdot = 0.0;
            for (std::size_t kk = 0; kk < kcount; ++kk) {
                dw[kk] = k::active().dot(g, n.rows[kk], dim);
                wdot += n.attn_weights[kk] * dw[kk];
            }
            std::vector<double> z(4 * dim);
            std::vector<double> gpre(hidden);
            std::vector<double> gz(4 * dim);
            for (std::size_t kk = 0; kk < kcount; ++kk) {
                const double ds = n.attn_weights[kk] * (dw[kk] - wdot);
                if (ds == 0.0) continue;
                const double* pre = n.attn_pre.data() + kk * hidden;
                const double* e = n.rows[kk];
                for (std::size_t j = 0; j < dim; ++j) {
                    z[j] = e[j];
                    z[dim + j] = n.target[j];
                    z[2 * dim + j] = e[j] * n.target[j];
                    z[3 * dim + j] = e[j] - n.target[j];
                }
                for (std::size_t j = 0; j < hidden; ++j) {
                    const double hj = std::max(pre[j], 0.0);
                    if (n.attn.gw2) n.attn.gw2[j] += ds * hj;
                    gpre[j] = (pre[j] > 0.0) ? ds * (*n.attn.w2)[j] : 0.0;
                }
                if (n.attn.gb2) *n.attn.gb2 += ds;
                if (n.attn.gw1)
                    k::active().ger_acc(gpre.data(), z.data(), n.attn.gw1, hidden,
                                        4 * dim);
                if (n.attn.gb1) k::active().axpy(1.0, gpre.data(), n.attn.gb1, hidden);
                std::fill(gz.begin(), gz.end(), 0.0);
                k::active().gemv_t_acc(n.attn.w1->data.data(), gpre.data(), gz.data(),
                                       hidden, 4 * dim);
                for (std::size_t j = 0; j < dim; ++j) {
                    if (n.row_grads[kk])
                        n.row_grads[kk][j] +=
                            gz[j] + gz[2 * dim + j] * n.target[j] + gz[3 * dim + j];
                    if (n.target_grad)
                        n.target_grad[j] +=
                            gz[dim + j] + gz[2 * dim + j] * e[j] - gz[3 * dim + j];
                }
            }
            break;
        }
    }
}

void Tape::backward() {
    if (loss_node_ < 0)
        throw StateError("backward() before a completed forward pass");
    nodes_[loss_node_].grad[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) backward_node(*it);
}

void Tape::reset() {
    nodes_.clear();
    loss_node_ = -1;
}

}  // namespace medalab::gradcore
