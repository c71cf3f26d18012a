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
#include "medalab/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "medalab/kernels/kernels.hpp"

namespace fs = std::filesystem;

namespace medalab::harness {

namespace {

using metrics::MetricsRecord;
using training::EpochPolicy;

std::string frac_str(double f) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", f);
    return buf;
}

struct Cell {
    model::ModelConfig model;
    std::string policy;      // policy name
    std::uint32_t epochs = 1;
    std::uint64_t seed = 1;
    double fraction = 1.0;
    bool emit_trace = false;
    std::optional<double> target_auc;  // table2 early-stop target

    Cell(model::ModelConfig m, std::string p, std::uint32_t e, std::uint64_t s,
         double f)
        : model(std::move(m)), policy(std::move(p)), epochs(e), seed(s), fraction(f) {}
};

std::string cell_basename(const ExperimentSpec& spec, const Cell& c) {
    return "cell_" + experiment_name(spec.experiment) + "_" +
           c.model.arch_name() + "_" + c.policy + "_s" + std::to_string(c.seed) +
           "_f" + frac_str(c.fraction);
}

std::map<std::string, std::string> read_kv(const std::string& path) {
    std::map<std::string, std::string> kv;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos)
            kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stdev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void run_cell(const ExperimentSpec& spec, const Cell& cell, const LoadedData& data,
              const std::string& cells_dir, std::uint64_t dataset_digest) {
    const std::string base = cells_dir + "/" + cell_basename(spec, cell);
    const std::uint64_t digest = spec_digest(spec, cell.model, cell.policy, cell.seed,
                                             cell.fraction, dataset_digest);
    if (fs::exists(base + ".csv") && fs::exists(base + ".meta")) {
        const auto kv = read_kv(base + ".meta");
        const auto it = kv.find("digest");
        if (it != kv.end() && it->second == std::to_string(digest)) return;  // resume
    }

    const sparsedata::Dataset* train = &data.train;
    sparsedata::Dataset reduced;
    if (cell.fraction < 1.0) {
        reduced = sparsedata::subsample(data.train, cell.fraction, cell.seed);
        train = &reduced;
    }

    training::TrainConfig tc = spec.train;
    tc.seed = cell.seed;
    const EpochPolicy policy = EpochPolicy::parse(cell.policy, cell.epochs);

    std::function<bool(const training::RunState&)> stop;
    if (cell.target_auc) {
        const double target = *cell.target_auc;
        stop = [target](const training::RunState& st) {
            const auto ends = training::epoch_end_test_records(st.records);
            return !ends.empty() && ends.back().auc >= target;
        };
    }

    training::RunResult res =
        training::run_policy(policy, tc, cell.model, *train, data.test, stop);

    auto records = res.records;
    if (!spec.record_wall_time)
        for (auto& r : records) r.wall_seconds = 0.0;  // keep CSVs reproducible
    metrics::write_metrics_csv(records, base + ".csv");

    if (cell.emit_trace) {
        std::ofstream tr(base + ".trace.csv", std::ios::binary);
        tr << "epoch,step,batch_logloss\n";
        char buf[80];
        for (const auto& t : res.trace) {
            std::snprintf(buf, sizeof(buf), "%u,%u,%.17g\n", t.epoch, t.step,
                          t.batch_logloss);
            tr << buf;
        }
    }

    std::ofstream meta(base + ".meta", std::ios::binary);
    meta << "experiment=" << experiment_name(spec.experiment) << '\n'
         << "model=" << cell.model.arch_name() << '\n'
         << "policy=" << cell.policy << '\n'
         << "epochs=" << cell.epochs << '\n'
         << "seed=" << cell.seed << '\n'
         << "fraction=" << frac_str(cell.fraction) << '\n'
         << "lr=" << spec.train.lr << '\n'
         << "batch=" << spec.train.batch << '\n'
         << "embedding_dim=" << cell.model.dim << '\n'
         << "embedding_init="
         << (cell.model.init.dist == embedding::InitSpec::Dist::uniform
                 ? "uniform(+-"
                 : "normal(sigma=")
         << cell.model.init.resolved(cell.model.dim) << ")\n"
         << "kernel_backend=" << kernels::backend_name() << '\n'
         << "dataset_digest=" << dataset_digest << '\n'
         << "train_examples=" << train->size() << '\n'
         << "test_examples=" << data.test.size() << '\n'
         << "digest=" << digest << '\n';
    if (cell.target_auc) meta << "target_auc=" << *cell.target_auc << '\n';
}

// Last test record overall = final test AUC of the run.
double final_test_auc(const std::vector<MetricsRecord>& records) {
    const auto ends = training::epoch_end_test_records(records);
    if (ends.empty()) throw StateError("run has no test records");
    return ends.back().auc;
}

}  // namespace

LoadedData load_or_generate_data(const ExperimentSpec& spec,
                                 const std::string& out_dir) {
    std::string dir = spec.data_path;
    if (dir.empty()) {
        dir = out_dir + "/data";
        const std::string train_path = dir + "/train.txt";
        bool regen = true;
        if (fs::exists(train_path)) {
            const auto kv = read_kv(train_path + ".meta");
            const auto it = kv.find("seed");
            if (it != kv.end() && std::stoull(it->second) == spec.synthetic.seed)
                regen = false;
        }
        if (regen) sparsedata::generate_synthetic_files(spec.synthetic, dir);
    }
    LoadedData data;
    data.train = sparsedata::parse_dataset(dir + "/train.txt");
    data.test = sparsedata::parse_dataset(dir + "/test.txt");
    return data;
}

void run_experiment(const ExperimentSpec& spec, const std::string& out_dir,
                    unsigned parallel) {
    fs::create_directories(out_dir);
    const std::string cells_dir = out_dir + "/cells";
    fs::create_directories(cells_dir);
    const LoadedData data = load_or_generate_data(spec, out_dir);
    const std::uint64_t dataset_digest = data.train.content_digest();

    std::vector<Cell> cells;
    const std::uint32_t cap = spec.epochs_cap;
    switch (spec.experiment) {
        case ExperimentKind::table1:
            for (const auto& m : spec.models)
                for (auto s : spec.seeds) {
                    cells.push_back({m, "one-epoch", 1, s, 1.0});
                    cells.push_back({m, "meda", std::max(cap, 2u), s, 1.0});
                }
            break;
        case ExperimentKind::table2:
            // full-data one-epoch targets run first; fraction cells are
            // appended below once the targets exist
            for (const auto& m : spec.models)
                for (auto s : spec.seeds) cells.push_back({m, "one-epoch", 1, s, 1.0});
            break;
        case ExperimentKind::curves:
            for (const auto& m : spec.models)
                for (auto s : spec.seeds) {
                    Cell naive{m, "naive-multi", std::max(cap, 2u), s, 1.0};
                    naive.emit_trace = true;
                    cells.push_back(naive);
                    Cell meda{m, "meda", std::max(cap, 2u), s, 1.0};
                    meda.emit_trace = true;
                    cells.push_back(meda);
                }
            break;
        case ExperimentKind::sweep:
            for (const auto& m : spec.models)
                for (auto s : spec.seeds) cells.push_back({m, "meda", cap, s, 1.0});
            break;
    }

    auto run_all = [&](const std::vector<Cell>& batch) {
        if (parallel <= 1 || batch.size() <= 1) {
            for (const auto& c : batch)
                run_cell(spec, c, data, cells_dir, dataset_digest);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        const unsigned n = std::min<unsigned>(parallel, batch.size());
        for (unsigned t = 0; t < n; ++t)
            workers.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < batch.size();
                     i = next.fetch_add(1))
                    run_cell(spec, batch[i], data, cells_dir, dataset_digest);
            });
        for (auto& w : workers) w.join();
    };

    run_all(cells);

    if (spec.experiment == ExperimentKind::table2) {
        std::vector<Cell> frac_cells;
        for (const auto& m : spec.models)
            for (auto s : spec.seeds) {
                Cell probe{m, "one-epoch", 1, s, 1.0};
                const auto target_records = metrics::read_metrics_csv(
                    cells_dir + "/" + cell_basename(spec, probe) + ".csv");
                const double target = final_test_auc(target_records);
                for (double f : spec.fractions) {
                    if (f >= 1.0) continue;
                    Cell c{m, "meda", cap, s, f};
                    c.target_auc = target;
                    frac_cells.push_back(c);
                }
            }
        run_all(frac_cells);
    }
}

void report(const std::string& dir, std::ostream& out) {
    const std::string cells_dir = dir + "/cells";
    if (!fs::exists(cells_dir)) throw ConfigError("no cells/ under " + dir);

    // cell meta grouped by experiment
    struct CellInfo {
        std::map<std::string, std::string> kv;
        std::string base;
    };
    std::map<std::string, std::vector<CellInfo>> by_exp;
    for (const auto& e : fs::directory_iterator(cells_dir)) {
        const std::string p = e.path().string();
        if (p.size() < 5 || p.substr(p.size() - 5) != ".meta") continue;
        CellInfo ci;
        ci.kv = read_kv(p);
        ci.base = p.substr(0, p.size() - 5);
        by_exp[ci.kv["experiment"]].push_back(std::move(ci));
    }

    char buf[256];
    for (auto& [exp, cells] : by_exp) {
        out << "== " << exp << " ==\n";
        std::ofstream csv(dir + "/report_" + exp + ".csv", std::ios::binary);
        if (exp == "table1") {
            // per model: base one-epoch AUC vs MEDA second-epoch AUC
            std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>
                per_model;  // model -> (base aucs, meda aucs) seed-aligned
            std::map<std::string, std::map<std::uint64_t, double>> base, meda;
            for (const auto& c : cells) {
                const double a = final_test_auc(metrics::read_metrics_csv(c.base + ".csv"));
                const auto seed = std::stoull(c.kv.at("seed"));
                if (c.kv.at("policy") == "one-epoch")
                    base[c.kv.at("model")][seed] = a;
                else if (c.kv.at("policy") == "meda")
                    meda[c.kv.at("model")][seed] = a;
            }
            csv << "model,base_auc_mean,base_auc_std,meda_auc_mean,meda_auc_std,"
                   "gain_abs_mean,gain_points_x100,wins,seeds\n";
            for (const auto& [mname, seeds_map] : base) {
                std::vector<double> b, md, gains;
                int wins = 0;
                for (const auto& [seed, a] : seeds_map) {
                    const auto it = meda.find(mname);
                    if (it == meda.end() || !it->second.count(seed)) continue;
                    b.push_back(a);
                    md.push_back(it->second.at(seed));
                    gains.push_back(md.back() - b.back());
                    if (md.back() > b.back()) ++wins;
                }
                std::snprintf(buf, sizeof(buf),
                              "%s base %.4f+-%.4f  meda %.4f+-%.4f  gain %+.4f "
                              "(%+.2f pts x100)  wins %d/%zu\n",
                              mname.c_str(), mean(b), stdev(b), mean(md), stdev(md),
                              mean(gains), 100.0 * mean(gains), wins, b.size());
                out << buf;
                std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.4f,%d,%zu\n",
                              mname.c_str(), mean(b), stdev(b), mean(md), stdev(md),
                              mean(gains), 100.0 * mean(gains), wins, b.size());
                csv << buf;
            }
        } else if (exp == "table2") {
            // recovery epochs per fraction
            std::map<std::string, std::map<std::uint64_t, double>> targets;
            for (const auto& c : cells)
                if (c.kv.at("policy") == "one-epoch" && c.kv.at("fraction") == "1")
                    targets[c.kv.at("model")][std::stoull(c.kv.at("seed"))] =
                        final_test_auc(metrics::read_metrics_csv(c.base + ".csv"));
            csv << "model,fraction,seed,recovery_epoch,reached,achieved_auc,target_auc\n";
            std::map<std::string, std::map<double, std::vector<double>>> recov;
            for (const auto& c : cells) {
                if (c.kv.at("policy") != "meda") continue;
                const std::string mname = c.kv.at("model");
                const double frac = std::stod(c.kv.at("fraction"));
                const auto seed = std::stoull(c.kv.at("seed"));
                const double target = targets[mname][seed];
                const auto recs = metrics::read_metrics_csv(c.base + ".csv");
                const auto ends = training::epoch_end_test_records(recs);
                const auto rec = metrics::epochs_to_recover(target, ends, 16);
                const double achieved = ends.empty() ? 0.0 : ends.back().auc;
                std::snprintf(buf, sizeof(buf), "%s,%g,%llu,%u,%d,%.6f,%.6f\n",
                              mname.c_str(), frac,
                              static_cast<unsigned long long>(seed),
                              rec.value_or(16), rec.has_value() ? 1 : 0, achieved,
                              target);
                csv << buf;
                recov[mname][frac].push_back(
                    rec ? static_cast<double>(*rec) : 17.0);  // 17 = not reached
            }
            for (const auto& [mname, fracs] : recov)
                for (const auto& [frac, epochs] : fracs) {
                    const double med = median(epochs);
                    std::snprintf(buf, sizeof(buf),
                                  "%s %g%%: median recovery epoch %s (of %zu seeds)\n",
                                  mname.c_str(), 100.0 * frac,
                                  med > 16.0 ? "not-reached" : frac_str(med).c_str(),
                                  epochs.size());
                    out << buf;
                }
        } else if (exp == "curves") {
            out << "model,policy,seed: epoch0-end test logloss -> epoch1 first-eval "
                   "test logloss (jump), epoch1-end test auc vs epoch0-end\n";
            csv << "model,policy,seed,e0_test_logloss,e1_first_test_logloss,"
                   "e0_test_auc,e1_test_auc,boundary_bump\n";
            for (const auto& c : cells) {
                const auto recs = metrics::read_metrics_csv(c.base + ".csv");
                const auto ends = training::epoch_end_test_records(recs);
                if (ends.size() < 2) continue;
                double e1_first_ll = std::nan("");
                for (const auto& r : recs)
                    if (r.split == "test" && r.epoch == 1) {
                        e1_first_ll = r.logloss;
                        break;
                    }
                // boundary bump from the per-step trace: first batch of each
                // epoch vs last traced batch of the previous epoch
                int bump = -1;
                std::ifstream tr(c.base + ".trace.csv");
                if (tr) {
                    std::string line;
                    std::getline(tr, line);
                    std::map<std::uint32_t, std::pair<double, double>> firstlast;
                    while (std::getline(tr, line)) {
                        std::istringstream ss(line);
                        std::string tok;
                        std::getline(ss, tok, ',');
                        const auto ep = static_cast<std::uint32_t>(std::stoul(tok));
                        std::getline(ss, tok, ',');
                        const auto step = std::stoul(tok);
                        std::getline(ss, tok, ',');
                        const double loss = std::stod(tok);
                        if (step == 0) firstlast[ep].first = loss;
                        firstlast[ep].second = loss;
                    }
                    if (firstlast.count(0) && firstlast.count(1))
                        bump = firstlast[1].first > firstlast[0].second ? 1 : 0;
                }
                std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.5f,%.5f,%.5f,%.5f,%d\n",
                              c.kv.at("model").c_str(), c.kv.at("policy").c_str(),
                              c.kv.at("seed").c_str(), ends[0].logloss, e1_first_ll,
                              ends[0].auc, ends[1].auc, bump);
                csv << buf;
                out << buf;
            }
        } else if (exp == "sweep") {
            csv << "model,seed,epoch,test_auc\n";
            std::map<std::string, std::vector<double>> mono;  // model -> per-seed fraction
            for (const auto& c : cells) {
                const auto ends = training::epoch_end_test_records(
                    metrics::read_metrics_csv(c.base + ".csv"));
                int nondec = 0;
                for (std::size_t i = 0; i + 1 < ends.size(); ++i)
                    if (ends[i + 1].auc >= ends[i].auc) ++nondec;
                if (ends.size() > 1)
                    mono[c.kv.at("model")].push_back(
                        static_cast<double>(nondec) /
                        static_cast<double>(ends.size() - 1));
                for (const auto& r : ends) {
                    std::snprintf(buf, sizeof(buf), "%s,%s,%u,%.6f\n",
                                  c.kv.at("model").c_str(), c.kv.at("seed").c_str(),
                                  r.epoch, r.auc);
                    csv << buf;
                }
            }
            for (const auto& [mname, fr] : mono) {
                std::snprintf(buf, sizeof(buf),
                              "%s: median non-decreasing AUC step fraction %.3f "
                              "over %zu seeds\n",
                              mname.c_str(), median(fr), fr.size());
                out << buf;
            }
        }
    }
}

}  // namespace medalab::harness
