#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "medalab/common/rng.hpp"
#include "medalab/gradcore/tape.hpp"

using namespace medalab;
using gradcore::DenseMatrix;
using gradcore::Tape;

namespace {

// Central finite differences, the independent oracle for every analytic
// gradient in this suite.
double central_diff(const std::function<double()>& f, double* x, double h = 1e-5) {
    const double saved = *x;
    *x = saved + h;
    const double up = f();
    *x = saved - h;
    const double down = f();
    *x = saved;
    return (up - down) / (2.0 * h);
}

void check_grad(double analytic, double numeric) {
    const double tol = std::max(1e-4 * std::abs(numeric), 1e-6);
    CHECK(std::abs(analytic - numeric) <= tol);
}

}  // namespace

TEST_CASE("affine forward") {
    DenseMatrix w(2, 2);
    w.data = {1, 2, 3, 4};
    std::vector<double> b = {0, 0};
    Tape tape;
    auto x = tape.value({1, 0});
    auto y = tape.affine(x, w, b, nullptr, nullptr);
    CHECK(tape.value_of(y)[0] == doctest::Approx(1.0));
    CHECK(tape.value_of(y)[1] == doctest::Approx(3.0));

    // zero input returns the bias
    DenseMatrix w2(2, 2);
    w2.data = {7, -3, 2, 9};
    std::vector<double> b2 = {5, -5};
    auto z = tape.affine(tape.value({0, 0}), w2, b2, nullptr, nullptr);
    CHECK(tape.value_of(z)[0] == doctest::Approx(5.0));
    CHECK(tape.value_of(z)[1] == doctest::Approx(-5.0));

    DenseMatrix w3(2, 2);
    w3.data = {2, 1, 0, 3};
    std::vector<double> b3 = {1, 1};
    auto q = tape.affine(tape.value({0.5, -1}), w3, b3, nullptr, nullptr);
    CHECK(tape.value_of(q)[0] == doctest::Approx(1.0));
    CHECK(tape.value_of(q)[1] == doctest::Approx(-2.0));
}

TEST_CASE("affine shape mismatch throws") {
    DenseMatrix w(2, 3);
    std::vector<double> b = {0, 0};
    Tape tape;
    auto x = tape.value({1, 0});  // length 2, W expects 3
    CHECK_THROWS_AS(tape.affine(x, w, b, nullptr, nullptr), DimensionError);
}

TEST_CASE("relu forward") {
    Tape tape;
    auto y = tape.relu(tape.value({-1, 0, 2}));
    CHECK(tape.value_of(y) == std::vector<double>{0, 0, 2});
    auto z = tape.relu(tape.value({3.5}));
    CHECK(tape.value_of(z)[0] == doctest::Approx(3.5));
}

TEST_CASE("sigmoid_bce values") {
    auto r = gradcore::sigmoid_bce(0.0, 1.0);
    CHECK(r.p == doctest::Approx(0.5));
    CHECK(r.loss == doctest::Approx(std::log(2.0)));

    // saturation: no overflow, loss ~ 0
    auto s = gradcore::sigmoid_bce(40.0, 1.0);
    CHECK(s.p == doctest::Approx(1.0));
    CHECK(s.loss >= 0.0);
    CHECK(s.loss < 1e-15);

    // high-precision scalar oracle: p = 1/(1+e^-1.2), loss = -ln(1-p)
    auto t = gradcore::sigmoid_bce(1.2, 0.0);
    CHECK(t.p == doctest::Approx(0.76852478).epsilon(1e-6));
    CHECK(t.loss == doctest::Approx(1.46328247).epsilon(1e-6));
}

TEST_CASE("bce loss non-negative over random logits") {
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double logit = rng.uniform(-50.0, 50.0);
        const double label = rng.next_unit() < 0.5 ? 0.0 : 1.0;
        const auto r = gradcore::sigmoid_bce(logit, label);
        CHECK(r.loss >= 0.0);
        CHECK(std::isfinite(r.loss));
    }
}

TEST_CASE("backward: canonical bce-sigmoid gradient") {
    DenseMatrix w(1, 1);
    w.data = {1.0};
    std::vector<double> b = {0.0};
    std::vector<double> gw = {0.0}, gb = {0.0};
    Tape tape;
    auto x = tape.value({0.0});
    auto logit = tape.affine(x, w, b, gw.data(), gb.data());
    tape.bce_loss(logit, 1.0);
    tape.backward();
    // d loss / d logit = p - y = -0.5, and d logit / d b = 1
    CHECK(gb[0] == doctest::Approx(-0.5));
}

TEST_CASE("backward before forward throws") {
    Tape tape;
    CHECK_THROWS_AS(tape.backward(), StateError);
}

TEST_CASE("dead relu blocks upstream gradients") {
    DenseMatrix w1(2, 2);
    w1.data = {1, 0, 0, 1};
    std::vector<double> b1 = {0, 0};
    std::vector<double> gw1(4, 0.0), gb1(2, 0.0);
    DenseMatrix w2(1, 2);
    w2.data = {1, 1};
    std::vector<double> b2 = {0};
    Tape tape;
    auto x = tape.value({-3.0, -1.0});  // all negative after identity affine
    auto h = tape.relu(tape.affine(x, w1, b1, gw1.data(), gb1.data()));
    auto logit = tape.affine(h, w2, b2, nullptr, nullptr);
    tape.bce_loss(logit, 0.0);
    tape.backward();
    for (double g : gw1) CHECK(g == 0.0);
    for (double g : gb1) CHECK(g == 0.0);
}

TEST_CASE("random 2-layer nets match finite differences") {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t in = 1 + rng.next_below(6);
        const std::size_t hid = 1 + rng.next_below(8);
        DenseMatrix w1(hid, in), w2(1, hid);
        for (double& v : w1.data) v = rng.uniform(-1, 1);
        for (double& v : w2.data) v = rng.uniform(-1, 1);
        std::vector<double> b1(hid), b2(1);
        for (double& v : b1) v = rng.uniform(-0.5, 0.5);
        b2[0] = rng.uniform(-0.5, 0.5);
        std::vector<double> x(in);
        for (double& v : x) v = rng.uniform(-1, 1);
        const double label = rng.next_unit() < 0.5 ? 0.0 : 1.0;

        auto loss = [&] {
            Tape t;
            auto h = t.relu(t.affine(t.value(x), w1, b1, nullptr, nullptr));
            auto logit = t.affine(h, w2, b2, nullptr, nullptr);
            t.bce_loss(logit, label);
            return t.loss();
        };

        std::vector<double> gw1(w1.size(), 0.0), gb1(hid, 0.0);
        std::vector<double> gw2(w2.size(), 0.0), gb2(1, 0.0);
        Tape t;
        auto h = t.relu(t.affine(t.value(x), w1, b1, gw1.data(), gb1.data()));
        auto logit = t.affine(h, w2, b2, gw2.data(), gb2.data());
        t.bce_loss(logit, label);
        t.backward();

        for (std::size_t i = 0; i < w1.data.size(); ++i)
            check_grad(gw1[i], central_diff(loss, &w1.data[i]));
        for (std::size_t i = 0; i < b1.size(); ++i)
            check_grad(gb1[i], central_diff(loss, &b1[i]));
        for (std::size_t i = 0; i < w2.data.size(); ++i)
            check_grad(gw2[i], central_diff(loss, &w2.data[i]));
        check_grad(gb2[0], central_diff(loss, &b2[0]));
    }
}

TEST_CASE("sum_pool accumulates duplicated rows") {
    // the same row fed twice must receive both gradient contributions
    std::vector<double> row = {0.3, -0.7};
    std::vector<double> grow(2, 0.0);
    DenseMatrix w(1, 2);
    w.data = {1.0, 2.0};
    std::vector<double> b = {0.0};

    auto loss = [&] {
        Tape t;
        auto pooled = t.sum_pool({row.data(), row.data()}, {nullptr, nullptr}, 2, 1.0);
        auto logit = t.affine(pooled, w, b, nullptr, nullptr);
        t.bce_loss(logit, 1.0);
        return t.loss();
    };

    Tape t;
    auto pooled = t.sum_pool({row.data(), row.data()}, {grow.data(), grow.data()}, 2,
                             1.0);
    auto logit = t.affine(pooled, w, b, nullptr, nullptr);
    t.bce_loss(logit, 1.0);
    t.backward();
    for (std::size_t i = 0; i < 2; ++i)
        check_grad(grow[i], central_diff(loss, &row[i]));
}

TEST_CASE("sigmoid node matches closed form") {
    Tape t;
    auto s = t.sigmoid_node(t.value({0.0, 2.0, -2.0}));
    CHECK(t.value_of(s)[0] == doctest::Approx(0.5));
    CHECK(t.value_of(s)[1] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
    CHECK(t.value_of(s)[2] == doctest::Approx(1.0 / (1.0 + std::exp(2.0))));
}
