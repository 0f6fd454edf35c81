// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0
//
// mpnas — multi-path architecture search over synthetic multi-domain image
// families. Subcommands: gen-data, search, train, analyze.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "mpnas/analysis.hpp"
#include "mpnas/checkpoint.hpp"
#include "mpnas/config.hpp"
#include "mpnas/errors.hpp"
#include "mpnas/search_engine.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mpnas;

namespace {

struct FlagOverrides {
    std::optional<std::string> mode;
    std::optional<uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> balance;
    std::optional<double> beta;
    std::optional<double> t0;
    std::optional<int> epochs;
    std::optional<int> trials;
};

void add_common_flags(CLI::App* cmd, FlagOverrides& f) {
    cmd->add_option("--mode", f.mode, "search mode: mpnas|mdsp|sp|mrp|sdnas");
    cmd->add_option("--seed", f.seed, "root RNG seed");
    cmd->add_option("--out", f.out, "output/run directory");
    cmd->add_option("--balance", f.balance,
                    "loss balancing: identity|quadratic|exp-const|exp-decay|exp-increase|empirical");
    cmd->add_option("--beta", f.beta, "reward cost exponent (negative)");
    cmd->add_option("--t0", f.t0, "reward target latency, ms");
    cmd->add_option("--epochs", f.epochs, "epoch count for this command's phase");
    cmd->add_option("--trials", f.trials, "random-path trials (mrp mode)");
}

// Precedence: config file < environment < flags.
json resolved_json(const std::string& config_file, const FlagOverrides& f, bool epochs_are_train) {
    json j = config_file.empty() ? json::object() : read_json_file(config_file);
    apply_env_overrides(j);
    if (f.mode) j["search"]["mode"] = *f.mode;
    if (f.seed) j["seed"] = *f.seed;
    if (f.out) j["out_dir"] = *f.out;
    if (f.balance) j["search"]["balance"]["kind"] = *f.balance;
    if (f.beta) j["search"]["reward"]["beta"] = *f.beta;
    if (f.t0) j["search"]["reward"]["t0"] = *f.t0;
    if (f.epochs) j["search"][epochs_are_train ? "train_epochs" : "search_epochs"] = *f.epochs;
    if (f.trials) j["search"]["mrp_trials"] = *f.trials;
    return j;
}

class JsonlWriter {
public:
    explicit JsonlWriter(const fs::path& file) : f_(file) {
        require<IoError>(f_.good(), "cannot write " + file.string());
    }
    void operator()(const StepRecord& rec) {
        json j;
        j["phase"] = rec.phase;
        j["step"] = rec.step;
        j["epoch"] = rec.epoch;
        j["domain"] = rec.domain;
        j["loss"] = rec.loss;
        j["w"] = rec.w;
        if (rec.q) j["q"] = *rec.q;
        if (rec.reward) j["reward"] = *rec.reward;
        j["path_hash"] = std::to_string(rec.path_hash);
        f_ << j.dump() << "\n";
    }

private:
    std::ofstream f_;
};

void check_written(const fs::path& p) {
    require<IoError>(fs::exists(p), "declared output missing: " + p.string());
}

std::vector<std::string> domain_names(const std::vector<DomainDataset>& datasets) {
    std::vector<std::string> names;
    for (const auto& ds : datasets) names.push_back(ds.name);
    return names;
}

void write_paths_json(const fs::path& file, const RunConfig& rc,
                      const std::vector<std::string>& names,
                      const std::vector<std::vector<PathSelection>>& sets) {
    json j;
    j["mode"] = mode_name(rc.search.mode);
    j["space_hash"] = std::to_string(rc.space.hash());
    j["domains"] = names;
    j["path_sets"] = json::array();
    for (const auto& set : sets) {
        json js = json::array();
        for (const auto& p : set) js.push_back(path_to_json(p));
        j["path_sets"].push_back(std::move(js));
    }
    write_json_file(file, j);
}

std::vector<std::vector<PathSelection>> read_paths_json(const fs::path& file, uint64_t space_hash,
                                                        std::vector<std::string>* names_out) {
    json j = read_json_file(file);
    if (names_out) *names_out = j.at("domains").get<std::vector<std::string>>();
    std::vector<std::vector<PathSelection>> sets;
    for (const auto& js : j.at("path_sets")) {
        std::vector<PathSelection> set;
        for (const auto& pj : js) {
            PathSelection p = path_from_json(pj);
            require<SpecError>(p.space_hash == space_hash,
                               "paths.json belongs to a different search space");
            set.push_back(std::move(p));
        }
        sets.push_back(std::move(set));
    }
    require<SpecError>(!sets.empty(), "paths.json has no path sets");
    return sets;
}

void write_cost_report(const fs::path& file, const RunConfig& rc,
                       const std::vector<std::string>& names,
                       const std::vector<PathSelection>& paths, const std::vector<double>& final_q) {
    LatencyCalibration cal = LatencyCalibration::identity(rc.space, rc.search.resolution,
                                                          rc.search.reward_cfg.target_latency_ms);
    std::ofstream f(file);
    require<IoError>(f.good(), "cannot write " + file.string());
    f << "path_id,params,flops,latency_ms,reward\n";
    char buf[64];
    for (size_t i = 0; i < paths.size(); ++i) {
        const long long p = params(rc.space, paths[i]);
        const long long fl = flops(rc.space, paths[i], rc.search.resolution).total();
        const double lat = latency_estimate(rc.space, paths[i], cal, rc.search.resolution);
        double r = 0.0;
        if (i < final_q.size()) r = reward(final_q[i], lat, rc.search.reward_cfg);
        f << names[i] << "," << p << "," << fl << ",";
        std::snprintf(buf, sizeof(buf), "%.17g", lat);
        f << buf << ",";
        std::snprintf(buf, sizeof(buf), "%.17g", r);
        f << buf << "\n";
    }
}

int cmd_gen_data(const std::string& config_file, const FlagOverrides& flags) {
    json j = resolved_json(config_file, flags, false);
    RunConfig rc = RunConfig::from_json(j);
    const fs::path out = rc.out_dir;
    fs::create_directories(out);
    auto datasets = generate(rc.family);
    for (const auto& ds : datasets) write_dataset(ds, out / ds.name);
    write_json_file(out / "family.json", family_to_json(rc.family));
    for (const auto& ds : datasets) check_written(out / ds.name / "manifest.json");
    check_written(out / "family.json");
    std::cout << "wrote " << datasets.size() << " domains to " << out.string() << "\n";
    return 0;
}

int cmd_search(const std::string& config_file, const FlagOverrides& flags, bool dry_run) {
    json j = resolved_json(config_file, flags, false);
    RunConfig rc = RunConfig::from_json(j);

    if (dry_run) {
        const auto decisions = compile(rc.space);
        std::cout << "config ok\n"
                  << "decision points: " << decisions.size() << "\n"
                  << "path count: " << path_count(rc.space).to_string() << "\n";
        return 0;
    }

    const fs::path out = rc.out_dir;
    fs::create_directories(out);
    write_json_file(out / "resolved_config.json", rc.to_json());

    auto datasets = rc.load_datasets();
    const auto names = domain_names(datasets);

    SearchPhaseOutput phase;
    {
        JsonlWriter sink(out / "metrics_search.jsonl");
        phase = run_search_phase(rc.space, datasets, rc.search, std::ref(sink));
    }

    for (const auto& em : phase.epochs) {
        std::cout << "epoch " << em.epoch << ":";
        for (size_t i = 0; i < em.train_loss.size(); ++i) {
            std::cout << " loss=" << em.train_loss[i] << " q=" << em.val_accuracy[i];
        }
        std::cout << " entropy=" << em.controller_entropy << " step_ms=" << em.step_ms << "\n";
    }

    write_paths_json(out / "paths.json", rc, names, phase.path_sets);

    std::vector<double> final_q;
    if (!phase.epochs.empty()) final_q = phase.epochs.back().val_accuracy;
    write_cost_report(out / "cost_report.csv", rc, names, phase.path_sets[0], final_q);

    if (phase.net) {
        std::vector<ParamPtr> to_save = phase.net->all_params();
        for (const auto& kit : phase.kits) {
            for (const auto& p : kit.params()) to_save.push_back(p);
        }
        save_checkpoint(out / "search_checkpoint.bin", to_save);
        json manifest;
        manifest["space_hash"] = std::to_string(rc.space.hash());
        manifest["domains"] = names;
        manifest["paths"] = json::array();
        for (const auto& p : phase.path_sets[0]) manifest["paths"].push_back(path_to_json(p));
        write_json_file(out / "checkpoint_manifest.json", manifest);
        check_written(out / "search_checkpoint.bin");
    }

    check_written(out / "resolved_config.json");
    check_written(out / "metrics_search.jsonl");
    check_written(out / "paths.json");
    check_written(out / "cost_report.csv");
    std::cout << "search done: " << out.string() << "\n";
    return 0;
}

int cmd_train(const std::string& run_dir, const FlagOverrides& flags) {
    const fs::path run = run_dir;
    json j = read_json_file(run / "resolved_config.json");
    apply_env_overrides(j);
    if (flags.balance) j["search"]["balance"]["kind"] = *flags.balance;
    if (flags.seed) j["seed"] = *flags.seed;
    if (flags.epochs) j["search"]["train_epochs"] = *flags.epochs;
    RunConfig rc = RunConfig::from_json(j);

    auto path_sets = read_paths_json(run / "paths.json", rc.space.hash(), nullptr);
    auto datasets = rc.load_datasets();
    const auto names = domain_names(datasets);

    TrainPhaseOutput out;
    {
        JsonlWriter sink(run / "metrics_train.jsonl");
        out = run_train_phase(rc.space, datasets, rc.search, path_sets, std::ref(sink));
    }

    if (rc.search.mode != SearchMode::SD_NAS) {
        // Re-run the canonical set deterministically to capture its weights.
        SuperNetwork trained(rc.space, 0);
        std::vector<DomainKit> kits;
        train_joint_model(rc.space, datasets, path_sets[0], rc.search,
                          Rng::derive(rc.search.seed, "train.weights", 0), {}, &trained, &kits);
        std::vector<ParamPtr> to_save = trained.all_params();
        for (const auto& kit : kits) {
            for (const auto& p : kit.params()) to_save.push_back(p);
        }
        save_checkpoint(run / "trained_checkpoint.bin", to_save);
        check_written(run / "trained_checkpoint.bin");
    }

    json acc;
    acc["domains"] = names;
    acc["mean_test_accuracy"] = out.mean_test_accuracy;
    acc["mean_val_accuracy"] = out.mean_val_accuracy;
    acc["per_set"] = json::array();
    for (const auto& r : out.per_set) {
        acc["per_set"].push_back({{"test_accuracy", r.test_accuracy},
                                  {"val_accuracy", r.val_accuracy},
                                  {"final_loss", r.final_loss}});
    }
    write_json_file(run / "accuracies.json", acc);

    std::cout << "domain";
    for (const auto& n : names) std::cout << "," << n;
    std::cout << "\ntest_accuracy";
    for (double a : out.mean_test_accuracy) std::cout << "," << a;
    std::cout << "\n";

    check_written(run / "metrics_train.jsonl");
    check_written(run / "accuracies.json");
    return 0;
}

int cmd_analyze(const std::string& run_dir) {
    const fs::path run = run_dir;
    json j = read_json_file(run / "resolved_config.json");
    RunConfig rc = RunConfig::from_json(j);
    std::vector<std::string> names;
    auto path_sets = read_paths_json(run / "paths.json", rc.space.hash(), &names);
    const auto decisions = compile(rc.space);
    const auto& canonical = path_sets[0];

    SimilarityMatrix matrix = similarity_matrix(decisions, canonical, names);
    write_matrix_csv(matrix, run / "jaccard_matrix.csv");

    // Sharing stats over the canonical merged model (weights irrelevant).
    SuperNetwork net(rc.space, 0);
    std::vector<DomainKit> kits;
    for (size_t i = 0; i < canonical.size(); ++i) {
        const int classes =
            i < rc.family.class_counts.size() ? rc.family.class_counts[i] : 2;
        kits.push_back(net.make_kit(classes, "d" + std::to_string(i), 0));
    }
    JointModel joint = merge(net, canonical, std::move(kits));
    SharingStats stats = sharing_stats(joint);

    json sj;
    sj["shared_nodes"] = stats.shared_nodes;
    sj["exclusive_nodes"] = stats.exclusive_nodes;
    sj["nodes"] = json::array();
    for (const auto& node : stats.nodes) {
        sj["nodes"].push_back({{"id", node.node_id}, {"domains", node.domains}});
    }
    if (path_sets.size() > 1) {
        // Aggregate over sets (MRP trials): mean pairwise Jaccard.
        double sum = 0.0;
        long pairs = 0;
        for (const auto& set : path_sets) {
            for (size_t a = 0; a < set.size(); ++a) {
                for (size_t b = a + 1; b < set.size(); ++b) {
                    sum += jaccard(decisions, set[a], set[b]);
                    ++pairs;
                }
            }
        }
        sj["aggregate"] = {{"sets", path_sets.size()},
                           {"mean_pairwise_jaccard", pairs > 0 ? sum / pairs : 1.0}};
    }
    write_json_file(run / "sharing_stats.json", sj);

    CostReductionReport report =
        cost_reduction_report(rc.space, canonical, rc.search.resolution, names);
    json cj;
    cj["joint_params"] = report.joint_params;
    cj["bundle_params"] = report.bundle_params;
    cj["joint_flops"] = report.joint_flops;
    cj["bundle_flops"] = report.bundle_flops;
    cj["param_reduction"] = report.param_reduction;
    cj["flops_reduction"] = report.flops_reduction;
    cj["per_domain"] = json::array();
    for (const auto& row : report.per_domain) {
        cj["per_domain"].push_back(
            {{"path_id", row.path_id}, {"params", row.params}, {"flops", row.flops}});
    }
    write_json_file(run / "cost_reduction.json", cj);

    // Plot-ready series: per-domain reward (search) or loss (train) by step.
    const fs::path metrics = fs::exists(run / "metrics_search.jsonl")
                                 ? run / "metrics_search.jsonl"
                                 : run / "metrics_train.jsonl";
    if (fs::exists(metrics)) {
        std::ifstream mf(metrics);
        std::map<long, std::vector<double>> series;
        std::string line;
        const bool use_reward = metrics.filename() == "metrics_search.jsonl";
        while (std::getline(mf, line)) {
            if (line.empty()) continue;
            json rec = json::parse(line);
            const long step = rec["step"].get<long>();
            auto& row = series[step];
            if (row.size() < names.size()) row.resize(names.size(), 0.0);
            const int d = rec["domain"].get<int>();
            row[static_cast<size_t>(d)] =
                use_reward ? rec.value("reward", 0.0) : rec.value("loss", 0.0);
        }
        std::ofstream pf(run / "plot_data.csv");
        pf << "step";
        for (const auto& n : names) pf << "," << n;
        pf << "\n";
        char buf[64];
        for (const auto& [step, row] : series) {
            pf << step;
            for (double v : row) {
                std::snprintf(buf, sizeof(buf), "%.17g", v);
                pf << "," << buf;
            }
            pf << "\n";
        }
        check_written(run / "plot_data.csv");
    }

    check_written(run / "jaccard_matrix.csv");
    check_written(run / "sharing_stats.json");
    check_written(run / "cost_reduction.json");
    std::cout << "analysis written to " << run.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-path NAS for multi-domain classification"};
    app.require_subcommand(1);

    std::string config_file, run_dir;
    bool dry_run = false;
    FlagOverrides gen_flags, search_flags, train_flags;

    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic domain family");
    gen->add_option("--config", config_file, "config JSON (family section)");
    add_common_flags(gen, gen_flags);

    CLI::App* search = app.add_subcommand("search", "run the architecture search");
    search->add_option("--config", config_file, "run config JSON");
    search->add_flag("--dry-run", dry_run, "validate config, print space size, exit");
    add_common_flags(search, search_flags);

    CLI::App* train = app.add_subcommand("train", "train the merged joint model from scratch");
    train->add_option("--run", run_dir, "run directory produced by search")->required();
    add_common_flags(train, train_flags);

    CLI::App* analyze = app.add_subcommand("analyze", "emit similarity/sharing/cost reports");
    analyze->add_option("--run", run_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(config_file, gen_flags);
        if (search->parsed()) return cmd_search(config_file, search_flags, dry_run);
        if (train->parsed()) return cmd_train(run_dir, train_flags);
        if (analyze->parsed()) return cmd_analyze(run_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
