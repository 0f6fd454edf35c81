// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "mpnas/config.hpp"

#include <cstdlib>
#include <fstream>

#include "mpnas/errors.hpp"

namespace mpnas {

using json = nlohmann::json;

json read_json_file(const std::filesystem::path& file) {
    std::ifstream f(file);
    require<IoError>(f.good(), "cannot open " + file.string());
    try {
        json j;
        f >> j;
        return j;
    } catch (const std::exception& e) {
        throw IoError("invalid JSON in " + file.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& file, const json& j) {
    std::ofstream f(file);
    require<IoError>(f.good(), "cannot write " + file.string());
    f << j.dump(2) << "\n";
}

void apply_env_overrides(json& j) {
    if (const char* out = std::getenv("MPNAS_OUT_DIR")) j["out_dir"] = out;
    if (const char* seed = std::getenv("MPNAS_SEED")) {
        try {
            j["seed"] = std::stoull(seed);
        } catch (const std::exception&) {
            throw SpecError(std::string("MPNAS_SEED is not an integer: ") + seed);
        }
    }
}

json space_to_json(const SearchSpaceSpec& spec) {
    json j;
    j["stem"] = {{"filters", spec.stem.filters}, {"stride", spec.stem.stride}};
    j["head_hidden_size"] = spec.head_hidden_size;
    j["input_channels"] = spec.input_channels;
    j["use_bias"] = spec.use_bias;
    j["blocks"] = json::array();
    for (const auto& b : spec.blocks) {
        j["blocks"].push_back({{"layer_count_choices", b.layer_count_choices},
                               {"kernel_choices", b.kernel_choices},
                               {"expansion_choices", b.expansion_choices},
                               {"filter_choices", b.filter_choices},
                               {"se_choices", b.se_choices},
                               {"stride", b.stride}});
    }
    return j;
}

SearchSpaceSpec space_from_json(const json& j) {
    SearchSpaceSpec spec = SearchSpaceSpec::desk_default();
    if (j.contains("stem")) {
        spec.stem.filters = j["stem"].value("filters", spec.stem.filters);
        spec.stem.stride = j["stem"].value("stride", spec.stem.stride);
    }
    spec.head_hidden_size = j.value("head_hidden_size", spec.head_hidden_size);
    spec.input_channels = j.value("input_channels", spec.input_channels);
    spec.use_bias = j.value("use_bias", spec.use_bias);
    if (j.contains("blocks")) {
        spec.blocks.clear();
        for (const auto& bj : j["blocks"]) {
            BlockSpec b;
            b.layer_count_choices = bj.value("layer_count_choices", b.layer_count_choices);
            b.kernel_choices = bj.value("kernel_choices", b.kernel_choices);
            b.expansion_choices = bj.value("expansion_choices", b.expansion_choices);
            b.filter_choices = bj.value("filter_choices", b.filter_choices);
            b.se_choices = bj.value("se_choices", b.se_choices);
            b.stride = bj.value("stride", b.stride);
            spec.blocks.push_back(std::move(b));
        }
    }
    spec.validate();
    return spec;
}

json family_to_json(const DomainFamilySpec& spec) {
    json j;
    j["domain_count"] = spec.domain_count;
    j["class_counts"] = spec.class_counts;
    j["correlations"] = json::array();
    for (const auto& c : spec.correlations) {
        j["correlations"].push_back({{"a", c.a}, {"b", c.b}, {"coeff", c.coeff}});
    }
    j["resolution"] = spec.resolution;
    j["channels"] = spec.channels;
    j["noise"] = spec.noise;
    if (!spec.noise_per_domain.empty()) j["noise_per_domain"] = spec.noise_per_domain;
    j["train_per_class"] = spec.train_per_class;
    j["val_per_class"] = spec.val_per_class;
    j["test_per_class"] = spec.test_per_class;
    j["seed"] = spec.seed;
    return j;
}

DomainFamilySpec family_from_json(const json& j) {
    DomainFamilySpec spec;
    spec.domain_count = j.value("domain_count", spec.domain_count);
    spec.class_counts = j.value("class_counts", spec.class_counts);
    if (j.contains("correlations")) {
        spec.correlations.clear();
        for (const auto& cj : j["correlations"]) {
            PairCorrelation c;
            c.a = cj.value("a", 0);
            c.b = cj.value("b", 1);
            c.coeff = cj.value("coeff", 0.0);
            spec.correlations.push_back(c);
        }
    }
    spec.resolution = j.value("resolution", spec.resolution);
    spec.channels = j.value("channels", spec.channels);
    spec.noise = j.value("noise", spec.noise);
    spec.noise_per_domain = j.value("noise_per_domain", spec.noise_per_domain);
    spec.train_per_class = j.value("train_per_class", spec.train_per_class);
    spec.val_per_class = j.value("val_per_class", spec.val_per_class);
    spec.test_per_class = j.value("test_per_class", spec.test_per_class);
    spec.seed = j.value("seed", spec.seed);
    spec.validate();
    return spec;
}

json search_to_json(const SearchConfig& cfg) {
    json j;
    j["mode"] = mode_name(cfg.mode);
    j["search_epochs"] = cfg.search_epochs;
    j["steps_per_epoch"] = cfg.steps_per_epoch;
    j["train_epochs"] = cfg.train_epochs;
    j["train_steps_per_epoch"] = cfg.train_steps_per_epoch;
    j["search_batch"] = cfg.search_batch;
    j["train_batch"] = cfg.train_batch;
    j["eval_batch"] = cfg.eval_batch;
    j["search_lr"] = cfg.search_lr;
    j["train_lr"] = cfg.train_lr;
    j["weight_decay"] = cfg.weight_decay;
    j["warmup_fraction"] = cfg.warmup_fraction;
    j["baseline_momentum"] = cfg.baseline_momentum;
    j["controller_lr"] = cfg.controller_lr;
    j["mrp_trials"] = cfg.mrp_trials;
    j["resolution"] = cfg.resolution;
    j["reward"] = {{"t0", cfg.reward_cfg.target_latency_ms}, {"beta", cfg.reward_cfg.beta}};
    j["balance"] = {{"kind", cfg.balance.name()},
                    {"w_max", cfg.balance.w_max},
                    {"w_min", cfg.balance.w_min},
                    {"loss_cap", cfg.balance.loss_cap}};
    if (!cfg.balance.empirical_weights.empty()) {
        j["balance"]["weights"] = cfg.balance.empirical_weights;
    }
    return j;
}

SearchConfig search_from_json(const json& j) {
    SearchConfig cfg;
    cfg.mode = mode_from_name(j.value("mode", "mpnas"));
    cfg.search_epochs = j.value("search_epochs", cfg.search_epochs);
    cfg.steps_per_epoch = j.value("steps_per_epoch", cfg.steps_per_epoch);
    cfg.train_epochs = j.value("train_epochs", cfg.train_epochs);
    cfg.train_steps_per_epoch = j.value("train_steps_per_epoch", cfg.train_steps_per_epoch);
    cfg.search_batch = j.value("search_batch", cfg.search_batch);
    cfg.train_batch = j.value("train_batch", cfg.train_batch);
    cfg.eval_batch = j.value("eval_batch", cfg.eval_batch);
    cfg.search_lr = j.value("search_lr", cfg.search_lr);
    cfg.train_lr = j.value("train_lr", cfg.train_lr);
    cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
    cfg.warmup_fraction = j.value("warmup_fraction", cfg.warmup_fraction);
    cfg.baseline_momentum = j.value("baseline_momentum", cfg.baseline_momentum);
    cfg.controller_lr = j.value("controller_lr", cfg.controller_lr);
    cfg.mrp_trials = j.value("mrp_trials", cfg.mrp_trials);
    cfg.resolution = j.value("resolution", cfg.resolution);
    if (j.contains("reward")) {
        cfg.reward_cfg.target_latency_ms = j["reward"].value("t0", cfg.reward_cfg.target_latency_ms);
        cfg.reward_cfg.beta = j["reward"].value("beta", cfg.reward_cfg.beta);
    }
    if (j.contains("balance")) {
        const auto& bj = j["balance"];
        cfg.balance = BoostingSchedule::from_name(bj.value("kind", std::string("exp-decay")));
        cfg.balance.w_max = bj.value("w_max", cfg.balance.w_max);
        cfg.balance.w_min = bj.value("w_min", cfg.balance.w_min);
        cfg.balance.loss_cap = bj.value("loss_cap", cfg.balance.loss_cap);
        cfg.balance.empirical_weights =
            bj.value("weights", cfg.balance.empirical_weights);
    }
    return cfg;
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig rc;
    if (j.contains("space")) rc.space = space_from_json(j["space"]);
    else rc.space = SearchSpaceSpec::desk_default();
    if (j.contains("family")) rc.family = family_from_json(j["family"]);
    rc.dataset_dirs = j.value("dataset_dirs", rc.dataset_dirs);
    if (j.contains("search")) rc.search = search_from_json(j["search"]);
    rc.search.seed = j.value("seed", rc.search.seed);
    rc.out_dir = j.value("out_dir", rc.out_dir);

    // Data generation gets its own stream unless the family pins a seed.
    if (!j.contains("family") || !j["family"].contains("seed")) {
        rc.family.seed = Rng::derive(rc.search.seed, "data");
    }
    // Input resolution follows the data.
    rc.search.resolution = rc.family.resolution;
    rc.space.validate();
    rc.family.validate();
    rc.search.validate();
    return rc;
}

json RunConfig::to_json() const {
    json j;
    j["seed"] = search.seed;
    j["out_dir"] = out_dir;
    j["space"] = space_to_json(space);
    j["family"] = family_to_json(family);
    if (!dataset_dirs.empty()) j["dataset_dirs"] = dataset_dirs;
    j["search"] = search_to_json(search);
    return j;
}

std::vector<DomainDataset> RunConfig::load_datasets() const {
    std::vector<DomainDataset> out;
    if (!dataset_dirs.empty()) {
        for (const auto& dir : dataset_dirs) {
            out.push_back(load_directory(dir, Rng::derive(search.seed, "load", out.size())));
        }
        for (const auto& ds : out) {
            require<SpecError>(ds.resolution == search.resolution,
                               "dataset " + ds.name + " resolution does not match config");
        }
    } else {
        out = generate(family);
    }
    return out;
}

json path_to_json(const PathSelection& path) {
    json j;
    j["space_hash"] = std::to_string(path.space_hash);
    j["choices"] = json::object();
    for (const auto& [id, idx] : path.choices) j["choices"][id] = idx;
    return j;
}

PathSelection path_from_json(const json& j) {
    PathSelection p;
    p.space_hash = std::stoull(j.at("space_hash").get<std::string>());
    for (const auto& [id, idx] : j.at("choices").items()) {
        p.choices[id] = idx.get<int>();
    }
    return p;
}

}  // namespace mpnas
