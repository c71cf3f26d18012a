#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "medalab/embedding/embedding.hpp"
#include "medalab/gradcore/tape.hpp"

using namespace medalab;
using embedding::EmbeddingState;
using embedding::InitSpec;
using embedding::SparseGrads;
using sparsedata::FieldSchema;

namespace {

std::vector<FieldSchema> two_fields() {
    return {
        {0, "user", 400, FieldSchema::Kind::one_hot, 1},
        {1, "hist", 300, FieldSchema::Kind::multi_hot, 10},
    };
}

}  // namespace

TEST_CASE("init spec resolution") {
    InitSpec s;
    CHECK(s.resolved(16) == doctest::Approx(0.25));
    CHECK(s.resolved(4) == doctest::Approx(0.5));
    s.param = 0.1;
    CHECK(s.resolved(16) == doctest::Approx(0.1));
}

TEST_CASE("initialization is deterministic and matches the declared moments") {
    EmbeddingState a(two_fields(), 8, InitSpec{}, 77, 0);
    EmbeddingState b(two_fields(), 8, InitSpec{}, 77, 0);
    CHECK(a == b);
    CHECK(a.table_checksum() == b.table_checksum());

    EmbeddingState c(two_fields(), 8, InitSpec{}, 78, 0);
    CHECK(c.table_checksum() != a.table_checksum());

    // uniform(-a, a) with a = 1/sqrt(8): mean 0, var a^2/3
    const double half = 1.0 / std::sqrt(8.0);
    double sum = 0.0, sumsq = 0.0;
    std::size_t n = 0;
    for (std::uint32_t f = 0; f < 2; ++f) {
        const auto& t = a.table(f);
        for (double v : t.data) {
            CHECK(std::abs(v) <= half);
            sum += v;
            sumsq += v * v;
            ++n;
        }
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(var == doctest::Approx(half * half / 3.0).epsilon(0.05));

    // moments start at zero, no row has stepped
    for (std::uint32_t f = 0; f < 2; ++f) {
        for (double v : a.moments_m(f).data) CHECK(v == 0.0);
        for (double v : a.moments_v(f).data) CHECK(v == 0.0);
        for (auto s : a.row_steps(f)) CHECK(s == 0);
    }
}

TEST_CASE("normal init matches declared sigma") {
    InitSpec spec;
    spec.dist = InitSpec::Dist::normal;
    spec.param = 0.05;
    EmbeddingState e(two_fields(), 16, spec, 5, 0);
    double sum = 0.0, sumsq = 0.0;
    std::size_t n = 0;
    for (std::uint32_t f = 0; f < 2; ++f)
        for (double v : e.table(f).data) {
            sum += v;
            sumsq += v * v;
            ++n;
        }
    const double mean = sum / n;
    CHECK(std::abs(mean) < 0.002);
    CHECK(sumsq / n - mean * mean == doctest::Approx(0.05 * 0.05).epsilon(0.1));
}

TEST_CASE("reinitialize redraws tables and is bitwise equal to fresh init") {
    EmbeddingState e(two_fields(), 8, InitSpec{}, 77, 0);
    const auto chk0 = e.table_checksum();

    // dirty the moments via one sparse step
    SparseGrads g(8);
    double* slot = g.slot(0, 3);
    for (int i = 0; i < 8; ++i) slot[i] = 0.5;
    e.sparse_adam_update(g, 0.001, 0.9, 0.999, 1e-8);
    CHECK(e.row_steps(0)[3] == 1);

    e.reinitialize(1, 77);
    CHECK(e.table_checksum() != chk0);

    EmbeddingState fresh(two_fields(), 8, InitSpec{}, 77, 1);
    CHECK(e == fresh);  // tables, moments and step counts all match

    // back to epoch 0 reproduces the original draw
    e.reinitialize(0, 77);
    CHECK(e.table_checksum() == chk0);
}

TEST_CASE("reinitialize can preserve optimizer moments") {
    EmbeddingState e(two_fields(), 8, InitSpec{}, 9, 0);
    SparseGrads g(8);
    double* slot = g.slot(1, 10);
    for (int i = 0; i < 8; ++i) slot[i] = 1.0;
    e.sparse_adam_update(g, 0.001, 0.9, 0.999, 1e-8);
    const double m_before = e.moments_m(1).row(10)[0];
    REQUIRE(m_before != 0.0);

    e.reinitialize(1, 9, /*preserve_moments=*/true);
    CHECK(e.moments_m(1).row(10)[0] == m_before);
    CHECK(e.row_steps(1)[10] == 1);

    e.reinitialize(2, 9, /*preserve_moments=*/false);
    CHECK(e.moments_m(1).row(10)[0] == 0.0);
    CHECK(e.row_steps(1)[10] == 0);
}

TEST_CASE("mean pooling of two hand-set rows") {
    EmbeddingState e(two_fields(), 2, InitSpec{}, 1, 0);
    double* r1 = e.mutable_row(1, 1);
    r1[0] = 1.0;
    r1[1] = 2.0;
    double* r2 = e.mutable_row(1, 2);
    r2[0] = 3.0;
    r2[1] = 4.0;
    gradcore::Tape t;
    auto pooled = t.sum_pool({e.row(1, 1), e.row(1, 2)}, {nullptr, nullptr}, 2, 0.5);
    CHECK(t.value_of(pooled)[0] == doctest::Approx(2.0));
    CHECK(t.value_of(pooled)[1] == doctest::Approx(3.0));
}

TEST_CASE("sparse adam: single touched row matches the scalar rule") {
    EmbeddingState e(two_fields(), 4, InitSpec{}, 33, 0);
    std::vector<double> before(e.row(0, 7), e.row(0, 7) + 4);

    SparseGrads g(4);
    double* slot = g.slot(0, 7);
    const double grads[4] = {0.3, -1.2, 0.0, 2.5};
    std::memcpy(slot, grads, sizeof(grads));
    e.sparse_adam_update(g, 0.001, 0.9, 0.999, 1e-8);

    // t=1: m/bc1 = g, v/bc2 = g^2, so delta = -lr * g/(|g|+eps)
    for (int i = 0; i < 4; ++i) {
        const double gi = grads[i];
        const double expected =
            gi == 0.0 ? 0.0 : -0.001 * gi / (std::abs(gi) + 1e-8);
        CHECK(e.row(0, 7)[i] - before[i] == doctest::Approx(expected).epsilon(1e-10));
    }

    // untouched rows did not move or step
    CHECK(e.row_steps(0)[7] == 1);
    CHECK(e.row_steps(0)[8] == 0);
    CHECK(e.row_steps(1)[7] == 0);
}

TEST_CASE("sparse adam: rows advance on their own step counts") {
    // Row A steps twice, row B once; B's second-moment bias correction
    // must use t=1, not the global count. Oracle: scalar Adam recomputed
    // by hand per row.
    EmbeddingState e(two_fields(), 1, InitSpec{}, 12, 0);
    auto scalar_adam = [](double p, double& m, double& v, double g, int t) {
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        const double mhat = m / (1.0 - std::pow(0.9, t));
        const double vhat = v / (1.0 - std::pow(0.999, t));
        return p - 0.001 * mhat / (std::sqrt(vhat) + 1e-8);
    };

    double pa = e.row(0, 0)[0], pb = e.row(0, 1)[0];
    double ma = 0, va = 0, mb = 0, vb = 0;

    SparseGrads g(1);
    *g.slot(0, 0) = 0.7;
    e.sparse_adam_update(g, 0.001, 0.9, 0.999, 1e-8);
    pa = scalar_adam(pa, ma, va, 0.7, 1);

    g.clear();
    *g.slot(0, 0) = -0.2;
    *g.slot(0, 1) = 0.9;
    e.sparse_adam_update(g, 0.001, 0.9, 0.999, 1e-8);
    pa = scalar_adam(pa, ma, va, -0.2, 2);
    pb = scalar_adam(pb, mb, vb, 0.9, 1);

    CHECK(e.row(0, 0)[0] == doctest::Approx(pa).epsilon(1e-12));
    CHECK(e.row(0, 1)[0] == doctest::Approx(pb).epsilon(1e-12));
    CHECK(e.row_steps(0)[0] == 2);
    CHECK(e.row_steps(0)[1] == 1);
}

TEST_CASE("sparse grads buffer semantics") {
    SparseGrads g(3);
    double* s1 = g.slot(0, 5);
    s1[0] = 1.0;
    double* s2 = g.slot(0, 5);
    CHECK(s1 == s2);  // same slot on re-touch
    CHECK(g.touched_count() == 1);
    g.slot(1, 5)[2] = 4.0;
    CHECK(g.touched_count() == 2);

    g.scale_all(0.5);
    CHECK(g.slot(0, 5)[0] == doctest::Approx(0.5));
    CHECK(g.slot(1, 5)[2] == doctest::Approx(2.0));

    g.clear();
    CHECK(g.touched_count() == 0);
    CHECK(g.slot(0, 5)[0] == 0.0);  // slots come back zeroed
}
