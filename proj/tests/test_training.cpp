#include <doctest.h>

#include <cmath>
#include <vector>

#include "medalab/sparsedata/synthetic.hpp"
#include "medalab/training/trainer.hpp"

using namespace medalab;
using namespace medalab::training;
using model::ModelConfig;
using sparsedata::FieldSchema;

namespace {

sparsedata::SyntheticResult small_data() {
    sparsedata::SyntheticConfig cfg;
    cfg.seed = 17;
    cfg.n_examples = 1100;
    cfg.schema = {
        {0, "user", 300, FieldSchema::Kind::one_hot, 1},
        {1, "item", 60, FieldSchema::Kind::one_hot, 1},
        {2, "hist", 60, FieldSchema::Kind::multi_hot, 6},
    };
    cfg.test_fraction = 1.0 / 11.0;
    return generate_synthetic(cfg);
}

ModelConfig small_model() {
    ModelConfig cfg;
    cfg.dim = 4;
    cfg.hidden = {8};
    return cfg;
}

TrainConfig small_train(std::uint64_t seed = 5) {
    TrainConfig cfg;
    cfg.batch = 32;
    cfg.seed = seed;
    cfg.boundary_eval_step = 4;
    cfg.trace_steps = 4;
    return cfg;
}

bool same_metrics(const std::vector<metrics::MetricsRecord>& a,
                  const std::vector<metrics::MetricsRecord>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].epoch != b[i].epoch || a[i].split != b[i].split ||
            a[i].auc != b[i].auc || a[i].logloss != b[i].logloss ||
            a[i].examples_seen != b[i].examples_seen)
            return false;
    return true;
}

}  // namespace

TEST_CASE("policy parsing") {
    CHECK(EpochPolicy::parse("one-epoch", 5).max_epochs == 1);  // forced to 1
    CHECK(EpochPolicy::parse("meda", 4).max_epochs == 4);
    CHECK(EpochPolicy::parse("meda", 4).name() == "meda");
    CHECK(EpochPolicy::parse("naive-multi", 2).kind ==
          EpochPolicy::Kind::naive_multi);
    CHECK(EpochPolicy::parse("freeze-after-first", 2).kind ==
          EpochPolicy::Kind::freeze_after_first);
    CHECK(EpochPolicy::parse("frozen-embedding", 2).kind ==
          EpochPolicy::Kind::frozen_embedding);
    CHECK(EpochPolicy::parse("mlp-replay", 2).kind == EpochPolicy::Kind::mlp_replay);
    CHECK_THROWS_AS(EpochPolicy::parse("warm-start", 2), ConfigError);
    CHECK_THROWS_AS(EpochPolicy::parse("meda", 0), ConfigError);
}

TEST_CASE("freeze masks per policy and epoch") {
    auto mask = [](const char* name, std::uint32_t epoch) {
        return freeze_mask(EpochPolicy::parse(name, 8), epoch);
    };
    // meda: everything trains, embeddings redrawn from epoch 1 on
    CHECK(!mask("meda", 0).reinit_emb);
    CHECK(mask("meda", 1).reinit_emb);
    CHECK(mask("meda", 7).reinit_emb);
    CHECK(mask("meda", 1).update_emb);
    CHECK(mask("meda", 1).update_mlp);
    // naive-multi / one-epoch: plain continued training
    for (const char* p : {"one-epoch", "naive-multi"})
        for (std::uint32_t e : {0u, 1u, 3u}) {
            CHECK(mask(p, e).update_mlp);
            CHECK(mask(p, e).update_emb);
            CHECK(!mask(p, e).reinit_emb);
        }
    // freeze-after-first / mlp-replay: embeddings train only in epoch 0
    for (const char* p : {"freeze-after-first", "mlp-replay"}) {
        CHECK(mask(p, 0).update_emb);
        CHECK(!mask(p, 1).update_emb);
        CHECK(mask(p, 1).update_mlp);
        CHECK(!mask(p, 1).reinit_emb);
    }
    // frozen-embedding: never trains the tables
    CHECK(!mask("frozen-embedding", 0).update_emb);
    CHECK(mask("frozen-embedding", 0).update_mlp);
}

TEST_CASE("one-step pipeline matches the scalar chain rule") {
    // single example, batch 1, no shuffle: the logit-layer bias gradient is
    // exactly p - y, and Adam at t=1 moves it by -lr * g/(|g|+eps).
    auto data = small_data();
    ModelConfig mcfg = small_model();
    TrainConfig tcfg = small_train();
    tcfg.shuffle = false;
    tcfg.batch = 1;
    tcfg.boundary_eval_step = 0;

    model::MlpState mlp(mcfg, data.train.field_count(), tcfg.seed);
    embedding::EmbeddingState emb(data.train.meta().schema, mcfg.dim,
                                  embedding::InitSpec{}, tcfg.seed, 0);
    const double p = model::predict(mcfg, mlp, emb, data.train, 0);
    const double g = p - data.train.label(0);

    RunState state;
    state.mlp = mlp;
    state.emb = emb;

    // restrict the dataset to one example so the epoch is one step
    sparsedata::Dataset one(sparsedata::DatasetMeta{data.train.meta()});
    {
        std::vector<std::vector<std::uint32_t>> fields;
        for (std::size_t f = 0; f < data.train.field_count(); ++f) {
            auto ids = data.train.field_ids(0, f);
            fields.emplace_back(ids.begin(), ids.end());
        }
        one.append(data.train.label(0), fields);
    }
    train_one_epoch(state, tcfg, mcfg, one, data.test, {true, true, false});

    const double before = mlp.b.back()[0];
    const double after = state.mlp.b.back()[0];
    CHECK(after - before ==
          doctest::Approx(-tcfg.lr * g / (std::abs(g) + tcfg.eps)).epsilon(1e-9));
    CHECK(state.mlp.step == 1);
    CHECK(state.examples_seen == 1);
}

TEST_CASE("meda for one epoch is bitwise identical to one-epoch") {
    auto data = small_data();
    ModelConfig mcfg = small_model();
    TrainConfig tcfg = small_train();
    auto a = run_policy(EpochPolicy::parse("one-epoch", 1), tcfg, mcfg, data.train,
                        data.test);
    auto b = run_policy(EpochPolicy::parse("meda", 1), tcfg, mcfg, data.train,
                        data.test);
    CHECK(a.mlp.checksum() == b.mlp.checksum());
    CHECK(a.emb.table_checksum() == b.emb.table_checksum());
    CHECK(same_metrics(a.records, b.records));
}

TEST_CASE("runs are deterministic given the seed") {
    auto data = small_data();
    ModelConfig mcfg = small_model();
    TrainConfig tcfg = small_train();
    auto a = run_policy(EpochPolicy::parse("meda", 2), tcfg, mcfg, data.train,
                        data.test);
    auto b = run_policy(EpochPolicy::parse("meda", 2), tcfg, mcfg, data.train,
                        data.test);
    CHECK(a.mlp.checksum() == b.mlp.checksum());
    CHECK(a.emb.table_checksum() == b.emb.table_checksum());
    CHECK(same_metrics(a.records, b.records));

    auto c = run_policy(EpochPolicy::parse("meda", 2), small_train(6), mcfg,
                        data.train, data.test);
    CHECK(a.mlp.checksum() != c.mlp.checksum());
}

TEST_CASE("meda reinitializes embeddings but theta persists") {
    auto data = small_data();
    ModelConfig mcfg = small_model();
    TrainConfig tcfg = small_train();

    auto meda = run_policy(EpochPolicy::parse("meda", 2), tcfg, mcfg, data.train,
                           data.test);
    auto naive = run_policy(EpochPolicy::parse("naive-multi", 2), tcfg, mcfg,
                            data.train, data.test);

    // identical first epoch, divergent second
    auto meda_e0 = epoch_end_test_records(meda.records);
    auto naive_e0 = epoch_end_test_records(naive.records);
    REQUIRE(meda_e0.size() == 2);
    REQUIRE(naive_e0.size() == 2);
    CHECK(meda_e0[0].auc == naive_e0[0].auc);
    CHECK(meda.mlp.checksum() != naive.mlp.checksum());
    CHECK(meda.emb.table_checksum() != naive.emb.table_checksum());

    // theta persisted: global Adam step covers both epochs
    const std::uint64_t steps_per_epoch =
        (data.train.size() + tcfg.batch - 1) / tcfg.batch;
    CHECK(meda.mlp.step == 2 * steps_per_epoch);
}

TEST_CASE("frozen-embedding leaves the tables at their initial draw") {
    auto data = small_data();
    ModelConfig mcfg = small_model();
    TrainConfig tcfg = small_train();
    auto r = run_policy(EpochPolicy::parse("frozen-embedding", 2), tcfg, mcfg,
                        data.train, data.test);
    embedding::EmbeddingState fresh(data.train.meta().schema, mcfg.dim,
                                    embedding::InitSpec{}, tcfg.seed, 0);
    CHECK(r.emb.table_checksum() == fresh.table_checksum());
    CHECK(r.mlp.step > 0);
}

TEST_CASE("freeze-after-first stops embedding updates at the epoch boundary") {
    auto data = small_data();
    ModelConfig mcfg = small_model();
    TrainConfig tcfg = small_train();
    auto one = run_policy(EpochPolicy::parse("one-epoch", 1), tcfg, mcfg,
                          data.train, data.test);
    auto faf = run_policy(EpochPolicy::parse("freeze-after-first", 3), tcfg, mcfg,
                          data.train, data.test);
    // tables trained in epoch 0 and untouched afterwards
    CHECK(faf.emb.table_checksum() == one.emb.table_checksum());
    CHECK(faf.mlp.checksum() != one.mlp.checksum());
}

TEST_CASE("early stop callback cuts the run short") {
    auto data = small_data();
    ModelConfig mcfg = small_model();
    TrainConfig tcfg = small_train();
    std::uint32_t epochs_seen = 0;
    auto r = run_policy(EpochPolicy::parse("meda", 8), tcfg, mcfg, data.train,
                        data.test, [&](const RunState& s) {
                            epochs_seen = s.epoch_index + 1;
                            return s.epoch_index >= 2;
                        });
    CHECK(epochs_seen == 3);
    CHECK(epoch_end_test_records(r.records).size() == 3);
}

TEST_CASE("non-finite loss raises DivergedRun") {
    auto data = small_data();
    ModelConfig mcfg = small_model();
    TrainConfig tcfg = small_train();
    tcfg.shuffle = false;

    RunState state;
    state.mlp = model::MlpState(mcfg, data.train.field_count(), tcfg.seed);
    state.emb = embedding::EmbeddingState(data.train.meta().schema, mcfg.dim,
                                          embedding::InitSpec{}, tcfg.seed, 0);
    // poison a row used by the first example
    const std::uint32_t id = data.train.field_ids(0, 0)[0];
    state.emb.mutable_row(0, id)[0] = std::nan("");
    CHECK_THROWS_AS(train_one_epoch(state, tcfg, mcfg, data.train, data.test,
                                    {true, true, false}),
                    DivergedRun);
}

TEST_CASE("epoch records carry the expected shape") {
    auto data = small_data();
    ModelConfig mcfg = small_model();
    TrainConfig tcfg = small_train();
    auto r = run_policy(EpochPolicy::parse("naive-multi", 2), tcfg, mcfg, data.train,
                        data.test);

    // per epoch: boundary train-window + test eval at step 4, then
    // epoch-end train + test
    auto ends = epoch_end_test_records(r.records);
    REQUIRE(ends.size() == 2);
    CHECK(ends[0].epoch == 0);
    CHECK(ends[1].epoch == 1);
    CHECK(ends[0].examples_seen == data.train.size());
    CHECK(ends[1].examples_seen == 2 * data.train.size());
    for (const auto& rec : r.records) {
        CHECK((rec.split == "train" || rec.split == "test"));
        CHECK(std::isfinite(rec.auc));
        CHECK(std::isfinite(rec.logloss));
    }

    // trace: first trace_steps batches of each epoch
    REQUIRE(r.trace.size() == 2 * tcfg.trace_steps);
    CHECK(r.trace[0].epoch == 0);
    CHECK(r.trace[0].step == 0);
    CHECK(r.trace[tcfg.trace_steps].epoch == 1);
    for (const auto& t : r.trace) CHECK(std::isfinite(t.batch_logloss));
}

TEST_CASE("evaluate respects the example cap") {
    auto data = small_data();
    ModelConfig mcfg = small_model();
    model::MlpState mlp(mcfg, data.train.field_count(), 1);
    embedding::EmbeddingState emb(data.train.meta().schema, mcfg.dim,
                                  embedding::InitSpec{}, 1, 0);
    auto full = evaluate(mcfg, mlp, emb, data.train);
    auto capped = evaluate(mcfg, mlp, emb, data.train, 100);
    CHECK(full.n == data.train.size());
    CHECK(capped.n == 100);
}
