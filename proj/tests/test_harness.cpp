#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "medalab/harness/experiment.hpp"
#include "medalab/model/checkpoint.hpp"

using namespace medalab;
using namespace medalab::harness;
namespace fs = std::filesystem;

namespace {

const char* kTinyConfig =
    "[experiment]\n"
    "models = dnn\n"
    "seeds = 1,2\n"
    "epochs = 2\n"
    "\n"
    "[model]\n"
    "dim = 4\n"
    "hidden = 8\n"
    "\n"
    "[train]\n"
    "batch = 32\n"
    "boundary_eval_step = 4\n"
    "\n"
    "[data]\n"
    "seed = 17\n"
    "n_examples = 1100\n"
    "fields = user:300:one:1,item:60:one:1,hist:60:multi:6\n"
    "test_fraction = 0.0909090909090909091\n";

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("config file parsing") {
    auto cfg = ConfigFile::parse(
        "# comment\n"
        "[train]\n"
        "lr = 0.01  # trailing comment\n"
        "batch=64\n"
        "flag = true\n"
        "list = a, b ,c\n");
    CHECK(cfg.get_double("train", "lr", 0.0) == doctest::Approx(0.01));
    CHECK(cfg.get_u64("train", "batch", 0) == 64);
    CHECK(cfg.get_bool("train", "flag", false));
    CHECK(cfg.get_list("train", "list") == std::vector<std::string>{"a", "b", "c"});
    CHECK(cfg.get_or("train", "missing", "x") == "x");
    CHECK(!cfg.has("other", "lr"));
    CHECK_THROWS_AS(cfg.get("train", "missing"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse("[unterminated\n"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse("keyvalue\n"), ConfigError);
    CHECK_THROWS_AS(cfg.get_double("train", "flag", 0.0), ConfigError);
}

TEST_CASE("experiment name round trip") {
    for (const char* n : {"table1", "table2", "curves", "sweep"})
        CHECK(experiment_name(parse_experiment(n)) == n);
    CHECK_THROWS_AS(parse_experiment("table3"), ConfigError);
}

TEST_CASE("build_spec: defaults, overrides, validation") {
    auto cfg = ConfigFile::parse(kTinyConfig);
    auto spec = build_spec(cfg, ExperimentKind::table1, {});
    CHECK(spec.models.size() == 1);
    CHECK(spec.models[0].dim == 4);
    CHECK(spec.models[0].hidden == std::vector<std::uint32_t>{8});
    CHECK(spec.seeds == std::vector<std::uint64_t>{1, 2});
    CHECK(spec.epochs_cap == 2);
    CHECK(spec.train.batch == 32);
    CHECK(spec.train.lr == doctest::Approx(0.001));  // default
    CHECK(spec.synthetic.schema.size() == 3);
    CHECK(spec.synthetic.schema[2].max_multi == 6);

    auto overridden = build_spec(cfg, ExperimentKind::table1, {9});
    CHECK(overridden.seeds == std::vector<std::uint64_t>{9});

    // defaults per experiment kind when [experiment] epochs is absent
    auto bare = ConfigFile::parse("[data]\nn_examples = 100\n");
    CHECK(build_spec(bare, ExperimentKind::table1, {}).epochs_cap == 2);
    CHECK(build_spec(bare, ExperimentKind::table2, {}).epochs_cap == 16);
    CHECK(build_spec(bare, ExperimentKind::curves, {}).epochs_cap == 8);

    auto badfrac = ConfigFile::parse("[experiment]\nfractions = 0.5\n");
    CHECK_THROWS_AS(build_spec(badfrac, ExperimentKind::table2, {}), ConfigError);
    CHECK_NOTHROW(build_spec(badfrac, ExperimentKind::table1, {}));

    auto badlr = ConfigFile::parse("[train]\nlr = 0\n");
    CHECK_THROWS_AS(build_spec(badlr, ExperimentKind::table1, {}), ConfigError);
}

TEST_CASE("spec digest tracks every cell-determining input") {
    auto cfg = ConfigFile::parse(kTinyConfig);
    auto spec = build_spec(cfg, ExperimentKind::table1, {});
    const auto base = spec_digest(spec, spec.models[0], "meda", 1, 1.0, 123);
    CHECK(spec_digest(spec, spec.models[0], "meda", 1, 1.0, 123) == base);
    CHECK(spec_digest(spec, spec.models[0], "one-epoch", 1, 1.0, 123) != base);
    CHECK(spec_digest(spec, spec.models[0], "meda", 2, 1.0, 123) != base);
    CHECK(spec_digest(spec, spec.models[0], "meda", 1, 0.5, 123) != base);
    CHECK(spec_digest(spec, spec.models[0], "meda", 1, 1.0, 124) != base);
    auto spec2 = spec;
    spec2.train.lr = 0.002;
    CHECK(spec_digest(spec2, spec.models[0], "meda", 1, 1.0, 123) != base);
    auto m2 = spec.models[0];
    m2.dim = 8;
    CHECK(spec_digest(spec, m2, "meda", 1, 1.0, 123) != base);
}

TEST_CASE("checkpoint round trip restores the exact state") {
    auto cfg = ConfigFile::parse(kTinyConfig);
    auto spec = build_spec(cfg, ExperimentKind::table1, {});
    auto data = generate_synthetic(spec.synthetic);

    // train briefly so moments and step counts are non-trivial
    training::TrainConfig tc = spec.train;
    tc.seed = 3;
    auto res = training::run_policy(training::EpochPolicy::parse("naive-multi", 1),
                                    tc, spec.models[0], data.train, data.test);

    const std::string path = "/tmp/medalab_test_ckpt.bin";
    model::save_checkpoint(path, res.emb, res.mlp);
    auto back = model::load_checkpoint(path, data.train.meta().schema);
    CHECK(back.mlp == res.mlp);
    CHECK(back.emb == res.emb);

    // schema mismatch is rejected
    auto wrong = data.train.meta().schema;
    wrong[0].cardinality += 1;
    CHECK_THROWS_AS(model::load_checkpoint(path, wrong), SchemaViolation);
}

TEST_CASE("table1 experiment end to end: cells, resume, reproducibility") {
    const std::string out = "/tmp/medalab_test_exp_t1";
    fs::remove_all(out);
    auto cfg = ConfigFile::parse(kTinyConfig);
    auto spec = build_spec(cfg, ExperimentKind::table1, {});
    run_experiment(spec, out);

    const std::string cell =
        out + "/cells/cell_table1_dnn_meda_s1_f1.csv";
    REQUIRE(fs::exists(cell));
    REQUIRE(fs::exists(out + "/cells/cell_table1_dnn_one-epoch_s2_f1.csv"));
    REQUIRE(fs::exists(cell.substr(0, cell.size() - 4) + ".meta"));
    const std::string bytes = slurp(cell);

    // rerunning resumes: cell files are left untouched byte for byte
    run_experiment(spec, out);
    CHECK(slurp(cell) == bytes);

    // regenerating from scratch reproduces the same bytes
    fs::remove(cell);
    run_experiment(spec, out);
    CHECK(slurp(cell) == bytes);

    // wall_seconds is zeroed by default so CSVs stay deterministic
    auto recs = metrics::read_metrics_csv(cell);
    REQUIRE(!recs.empty());
    for (const auto& r : recs) CHECK(r.wall_seconds == 0.0);

    std::ostringstream rep;
    report(out, rep);
    CHECK(rep.str().find("table1") != std::string::npos);
    CHECK(rep.str().find("meda") != std::string::npos);
    CHECK(fs::exists(out + "/report_table1.csv"));
}

TEST_CASE("table2 experiment runs fraction cells against full-data targets") {
    const std::string out = "/tmp/medalab_test_exp_t2";
    fs::remove_all(out);
    auto cfg = ConfigFile::parse(kTinyConfig);
    auto spec = build_spec(cfg, ExperimentKind::table2, {4});
    spec.epochs_cap = 3;  // keep the desk run short
    run_experiment(spec, out);

    REQUIRE(fs::exists(out + "/cells/cell_table2_dnn_one-epoch_s4_f1.csv"));
    for (const char* f : {"0.5", "0.25", "0.125"}) {
        const std::string base =
            out + "/cells/cell_table2_dnn_meda_s4_f" + std::string(f);
        REQUIRE(fs::exists(base + ".csv"));
        // fraction cells carry the early-stop target in their meta
        CHECK(slurp(base + ".meta").find("target_auc=") != std::string::npos);
    }

    std::ostringstream rep;
    report(out, rep);
    CHECK(rep.str().find("table2") != std::string::npos);
    CHECK(fs::exists(out + "/report_table2.csv"));
}

TEST_CASE("curves cells write per-step traces") {
    const std::string out = "/tmp/medalab_test_exp_curves";
    fs::remove_all(out);
    auto cfg = ConfigFile::parse(kTinyConfig);
    auto spec = build_spec(cfg, ExperimentKind::curves, {5});
    spec.epochs_cap = 2;
    run_experiment(spec, out);

    const std::string trace =
        out + "/cells/cell_curves_dnn_meda_s5_f1.trace.csv";
    REQUIRE(fs::exists(trace));
    const std::string t = slurp(trace);
    CHECK(t.rfind("epoch,step,batch_logloss\n", 0) == 0);
    CHECK(t.find("\n1,0,") != std::string::npos);  // epoch-1 steps traced

    std::ostringstream rep;
    report(out, rep);
    CHECK(fs::exists(out + "/report_curves.csv"));
}

TEST_CASE("parallel cell execution matches serial output") {
    const std::string serial = "/tmp/medalab_test_exp_ser";
    const std::string par = "/tmp/medalab_test_exp_par";
    fs::remove_all(serial);
    fs::remove_all(par);
    auto cfg = ConfigFile::parse(kTinyConfig);
    auto spec = build_spec(cfg, ExperimentKind::sweep, {1, 2});
    spec.epochs_cap = 2;
    run_experiment(spec, serial, 1);
    run_experiment(spec, par, 2);
    for (const auto& e : fs::directory_iterator(serial + "/cells")) {
        const std::string name = e.path().filename().string();
        CHECK(slurp(e.path().string()) == slurp(par + "/cells/" + name));
    }
}
