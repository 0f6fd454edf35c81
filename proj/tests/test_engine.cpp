// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "mpnas/analysis.hpp"
#include "mpnas/errors.hpp"
#include "mpnas/search_engine.hpp"

using namespace mpnas;

namespace {

// Small space and family so engine tests stay fast.
SearchSpaceSpec tiny_space() {
    SearchSpaceSpec spec;
    spec.stem = StemSpec{4, 2};
    spec.head_hidden_size = 16;
    spec.input_channels = 1;
    spec.blocks = {BlockSpec{{1, 2}, {3, 5}, {1, 3}, {4, 8}, {0, 1}, 1},
                   BlockSpec{{1, 2}, {3, 5}, {1, 3}, {8, 12}, {0, 1}, 2}};
    return spec;
}

SearchSpaceSpec singleton_space() {
    SearchSpaceSpec spec;
    spec.stem = StemSpec{4, 2};
    spec.head_hidden_size = 16;
    spec.input_channels = 1;
    spec.blocks = {BlockSpec{{1}, {3}, {3}, {8}, {1}, 1}};
    return spec;
}

DomainFamilySpec tiny_family(int domains, double noise, uint64_t seed) {
    DomainFamilySpec family;
    family.domain_count = domains;
    family.class_counts.assign(static_cast<size_t>(domains), 2);
    family.correlations.clear();
    family.resolution = 8;
    family.noise = noise;
    family.train_per_class = 16;
    family.val_per_class = 8;
    family.test_per_class = 8;
    family.seed = seed;
    return family;
}

SearchConfig tiny_config(SearchMode mode, uint64_t seed) {
    SearchConfig cfg;
    cfg.mode = mode;
    cfg.search_epochs = 1;
    cfg.steps_per_epoch = 20;
    cfg.train_epochs = 1;
    cfg.train_steps_per_epoch = 30;
    cfg.search_batch = 8;
    cfg.train_batch = 8;
    cfg.eval_batch = 8;
    cfg.resolution = 8;
    // Tiny 8x8 probe nets sit in a sharper loss landscape than the default
    // 16x16 space; the desk-default rates oscillate here.
    cfg.search_lr = 1e-2f;
    cfg.train_lr = 1e-2f;
    cfg.balance = BoostingSchedule::identity();
    cfg.seed = seed;
    return cfg;
}

struct RecordCollector {
    std::vector<StepRecord> records;
    MetricsSink sink() {
        return [this](const StepRecord& r) { records.push_back(r); };
    }
};

}  // namespace

TEST_CASE("singleton space, one domain: plain training, loss decreases within 200 steps") {
    auto datasets = generate(tiny_family(1, 0.0, 5));
    SearchConfig cfg = tiny_config(SearchMode::MPNAS, 7);
    cfg.search_epochs = 1;
    cfg.steps_per_epoch = 200;
    cfg.search_lr = 2e-2f;

    SearchEngine engine(singleton_space(), &datasets, cfg);
    RecordCollector rc;
    for (int s = 0; s < 200; ++s) engine.search_step(rc.sink());

    double first = 0.0, last = 0.0;
    for (int i = 0; i < 20; ++i) {
        first += rc.records[static_cast<size_t>(i)].loss;
        last += rc.records[rc.records.size() - 20 + static_cast<size_t>(i)].loss;
    }
    first /= 20;
    last /= 20;
    CHECK(last < first);
    CHECK(last < 0.5 * std::log(2.0));  // well below the chance loss ln(2)
}

TEST_CASE("controller warm-up: logits bitwise unchanged by early steps") {
    auto datasets = generate(tiny_family(2, 0.05, 6));
    SearchConfig cfg = tiny_config(SearchMode::MPNAS, 8);
    cfg.warmup_fraction = 0.5;  // first 10 of 20 steps frozen

    SearchEngine engine(tiny_space(), &datasets, cfg);
    std::map<std::string, Tensor> before;
    for (const auto& ctrl : engine.controllers()) {
        for (const auto& [id, p] : ctrl->logits()) before.emplace(ctrl.get() == engine.controllers()[0].get() ? "0." + id : "1." + id, p->value);
    }
    for (int s = 0; s < 5; ++s) engine.search_step();
    size_t ci = 0;
    for (const auto& ctrl : engine.controllers()) {
        for (const auto& [id, p] : ctrl->logits()) {
            const Tensor& b = before.at(std::to_string(ci) + "." + id);
            for (size_t i = 0; i < p->value.size(); ++i) CHECK(p->value[i] == b[i]);
        }
        ++ci;
    }
    // And the shared weights did move (the model trains during warm-up).
    CHECK(engine.step() == 5);
}

TEST_CASE("controller updates never touch super-network weights") {
    auto datasets = generate(tiny_family(1, 0.05, 9));
    SearchConfig cfg = tiny_config(SearchMode::MPNAS, 10);
    SearchEngine engine(tiny_space(), &datasets, cfg);

    std::map<std::string, Tensor> weights;
    for (const auto& [name, p] : engine.net().store()) weights.emplace(name, p->value);

    Rng rng(4);
    auto [path, logp] = engine.controllers()[0]->sample_path(rng);
    (void)logp;
    const_cast<DomainController&>(*engine.controllers()[0]).reinforce_update(path, 0.7);

    for (const auto& [name, p] : engine.net().store()) {
        const Tensor& b = weights.at(name);
        for (size_t i = 0; i < p->value.size(); ++i) CHECK(p->value[i] == b[i]);
    }
}

TEST_CASE("lockstep identical domains sample identical paths and rewards") {
    DomainFamilySpec family = tiny_family(2, 0.0, 11);
    family.correlations = {{0, 1, 1.0}};  // identical datasets at zero noise
    auto datasets = generate(family);

    SearchConfig cfg = tiny_config(SearchMode::MPNAS, 12);
    cfg.lockstep_domains = true;
    SearchEngine engine(tiny_space(), &datasets, cfg);
    RecordCollector rc;
    for (int s = 0; s < 10; ++s) engine.search_step(rc.sink());

    for (size_t i = 0; i + 1 < rc.records.size(); i += 2) {
        const StepRecord& a = rc.records[i];
        const StepRecord& b = rc.records[i + 1];
        REQUIRE(a.step == b.step);
        CHECK(a.path_hash == b.path_hash);
        CHECK(*a.reward == *b.reward);
        CHECK(a.loss == b.loss);
    }
}

TEST_CASE("budget accounting: two forward passes per domain per step") {
    auto datasets = generate(tiny_family(3, 0.05, 13));
    SearchConfig cfg = tiny_config(SearchMode::MPNAS, 14);
    cfg.steps_per_epoch = 1;  // one step per epoch, as in the search loop's outer iteration
    SearchEngine engine(tiny_space(), &datasets, cfg);
    engine.search_step();
    CHECK(engine.forward_passes() == 2 * 3);
    engine.search_step();
    CHECK(engine.forward_passes() == 2 * 2 * 3);
}

TEST_CASE("search phase is deterministic: identical config and seed, identical stream") {
    auto datasets = generate(tiny_family(2, 0.05, 15));
    SearchConfig cfg = tiny_config(SearchMode::MPNAS, 16);

    RecordCollector a, b;
    auto pa = run_search_phase(tiny_space(), datasets, cfg, a.sink());
    auto pb = run_search_phase(tiny_space(), datasets, cfg, b.sink());

    REQUIRE(a.records.size() == b.records.size());
    for (size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].loss == b.records[i].loss);
        CHECK(*a.records[i].q == *b.records[i].q);
        CHECK(a.records[i].path_hash == b.records[i].path_hash);
    }
    REQUIRE(pa.path_sets.size() == pb.path_sets.size());
    for (size_t s = 0; s < pa.path_sets.size(); ++s) {
        for (size_t d = 0; d < pa.path_sets[s].size(); ++d) {
            CHECK(pa.path_sets[s][d].choices == pb.path_sets[s][d].choices);
        }
    }
}

TEST_CASE("finalize on a singleton space returns the only path for every domain") {
    auto datasets = generate(tiny_family(2, 0.05, 17));
    SearchConfig cfg = tiny_config(SearchMode::MPNAS, 18);
    cfg.steps_per_epoch = 2;
    SearchEngine engine(singleton_space(), &datasets, cfg);
    engine.search_step();
    auto paths = engine.final_paths();
    REQUIRE(paths.size() == 2);
    for (const auto& p : paths) {
        for (const auto& [id, idx] : p.choices) {
            (void)id;
            CHECK(idx == 0);
        }
    }
}

TEST_CASE("mrp: pre-drawn random paths, reproducible and independent of training") {
    auto datasets = generate(tiny_family(2, 0.05, 19));
    SearchConfig cfg = tiny_config(SearchMode::MRP, 20);
    cfg.mrp_trials = 4;

    auto a = run_search_phase(tiny_space(), datasets, cfg);
    auto b = run_search_phase(tiny_space(), datasets, cfg);
    REQUIRE(a.path_sets.size() == 4);
    REQUIRE(b.path_sets.size() == 4);
    for (size_t t = 0; t < 4; ++t) {
        for (size_t d = 0; d < 2; ++d) {
            CHECK(a.path_sets[t][d].choices == b.path_sets[t][d].choices);
        }
    }
    CHECK(a.epochs.empty());  // no supernet training in mrp
}

TEST_CASE("mrp pairwise node overlap matches the combinatorial expectation") {
    // All-binary space: overlap per decision is 1/2, so |A n B| ~ Bin(10, 1/2).
    SearchSpaceSpec spec = tiny_space();
    auto datasets = generate(tiny_family(2, 0.05, 21));
    SearchConfig cfg = tiny_config(SearchMode::MRP, 22);
    cfg.mrp_trials = 300;

    auto phase = run_search_phase(spec, datasets, cfg);
    auto decisions = compile(spec);
    SuperNetwork net(spec, 0);

    double mean_overlap = 0.0;
    for (const auto& set : phase.path_sets) {
        auto ids0 = net.path_node_ids(set[0]);
        auto ids1_v = net.path_node_ids(set[1]);
        std::set<std::string> ids1(ids1_v.begin(), ids1_v.end());
        int overlap = 0;
        for (const auto& id : ids0) overlap += static_cast<int>(ids1.count(id));
        mean_overlap += overlap;
    }
    mean_overlap /= static_cast<double>(phase.path_sets.size());

    const double d = static_cast<double>(decisions.size());  // 10
    const double sigma_mean = std::sqrt(d * 0.25 / static_cast<double>(cfg.mrp_trials));
    CHECK(std::fabs(mean_overlap - d / 2.0) <= 3.0 * sigma_mean);
}

TEST_CASE("sp mode: one pre-searched path shared by every domain") {
    auto datasets = generate(tiny_family(3, 0.05, 23));
    SearchConfig cfg = tiny_config(SearchMode::SP, 24);
    auto phase = run_search_phase(tiny_space(), datasets, cfg);
    REQUIRE(phase.path_sets.size() == 1);
    REQUIRE(phase.path_sets[0].size() == 3);
    auto decisions = compile(tiny_space());
    CHECK(phase.path_sets[0][0].choices == phase.path_sets[0][1].choices);
    CHECK(phase.path_sets[0][0].choices == phase.path_sets[0][2].choices);
    CHECK(jaccard(decisions, phase.path_sets[0][0], phase.path_sets[0][2]) == 1.0);
}

TEST_CASE("latency-dominated reward drives every controller to the cheap options") {
    // Capacity choices with a 6x cost spread; a strongly negative beta makes
    // the latency term dominate the reward, a controlled dominant signal.
    SearchSpaceSpec spec;
    spec.stem = StemSpec{4, 2};
    spec.head_hidden_size = 8;
    spec.blocks = {BlockSpec{{1}, {3}, {1, 6}, {4, 32}, {0}, 1}};

    auto datasets = generate(tiny_family(2, 0.3, 25));
    SearchConfig cfg = tiny_config(SearchMode::MPNAS, 26);
    cfg.search_epochs = 1;
    cfg.steps_per_epoch = 200;
    cfg.reward_cfg.beta = -2.0;
    cfg.warmup_fraction = 0.1;

    SearchEngine engine(spec, &datasets, cfg);
    for (int s = 0; s < 200; ++s) engine.search_step();
    for (const auto& path : engine.final_paths()) {
        CHECK(path.option_index("b0.expansion") == 0);
        CHECK(path.option_index("b0.filters") == 0);
    }
}

TEST_CASE("train_joint on one domain equals a hand-rolled training loop bitwise") {
    SearchSpaceSpec spec = tiny_space();
    auto datasets = generate(tiny_family(1, 0.05, 27));
    SearchConfig cfg = tiny_config(SearchMode::MPNAS, 28);
    cfg.train_epochs = 2;
    cfg.train_steps_per_epoch = 25;

    auto decisions = compile(spec);
    Rng prng(17);
    PathSelection path = uniform_random_path(decisions, spec.hash(), prng);
    const uint64_t weight_seed = 3141;

    SuperNetwork trained(spec, 0);
    std::vector<DomainKit> kits_out;
    train_joint_model(spec, datasets, {path}, cfg, weight_seed, {}, &trained, &kits_out);

    // The same schedule, written out step by step.
    SuperNetwork net(spec, weight_seed);
    DomainKit kit = net.make_kit(datasets[0].class_count, "d0", Rng::derive(weight_seed, "kit", 0));
    ComputeGraph graph = net.instantiate(path, kit);
    BatchIterator iter(datasets[0], Split::Train, cfg.train_batch,
                       Rng::derive(cfg.seed, "train.data", 0));
    RmsProp::Options opt;
    opt.lr = cfg.train_lr;
    opt.weight_decay = cfg.weight_decay;
    RmsProp optimizer(opt);
    auto params = graph.parameters();
    const long total = cfg.total_train_steps();
    for (long step = 0; step < total; ++step) {
        Batch batch = iter.next();
        Tensor logits = graph.forward(batch.inputs);
        LossResult lr = softmax_cross_entropy(logits, batch.labels);
        graph.backward(lr.logits_grad);
        optimizer.step(params, cosine_lr_scale(step, total));
        for (auto& p : params) p->grad.zero();
    }

    for (const auto& [name, p] : net.store()) {
        const Tensor& other = trained.param(name)->value;
        for (size_t i = 0; i < p->value.size(); ++i) CHECK(p->value[i] == other[i]);
    }
    const auto kit_params = kit.params();
    const auto out_params = kits_out[0].params();
    REQUIRE(kit_params.size() == out_params.size());
    for (size_t k = 0; k < kit_params.size(); ++k) {
        for (size_t i = 0; i < kit_params[k]->value.size(); ++i) {
            CHECK(kit_params[k]->value[i] == out_params[k]->value[i]);
        }
    }
}

TEST_CASE("disjoint-path domains train independently (bitwise per-domain weights)") {
    SearchSpaceSpec spec = tiny_space();
    DomainFamilySpec family = tiny_family(2, 0.05, 29);
    auto datasets = generate(family);
    SearchConfig cfg = tiny_config(SearchMode::MPNAS, 30);
    cfg.train_epochs = 1;
    cfg.train_steps_per_epoch = 40;

    PathSelection a, b;
    a.space_hash = b.space_hash = spec.hash();
    for (const auto& d : compile(spec)) {
        a.choices[d.id] = 0;
        b.choices[d.id] = 1;  // disjoint at every decision
    }
    const uint64_t weight_seed = 999;

    SuperNetwork joint_net(spec, 0);
    std::vector<DomainKit> joint_kits;
    train_joint_model(spec, datasets, {a, b}, cfg, weight_seed, {}, &joint_net, &joint_kits);

    std::vector<DomainDataset> only0(datasets.begin(), datasets.begin() + 1);
    SuperNetwork solo_net(spec, 0);
    std::vector<DomainKit> solo_kits;
    train_joint_model(spec, only0, {a}, cfg, weight_seed, {}, &solo_net, &solo_kits);

    // Domain 0's path tensors and kit match the solo run exactly.
    DomainKit probe = joint_net.make_kit(2, "probe", 1);
    ComputeGraph g = joint_net.instantiate(a, probe);
    for (const auto& p : g.parameters()) {
        if (p->name.rfind("probe", 0) == 0) continue;
        const Tensor& solo = solo_net.param(p->name)->value;
        for (size_t i = 0; i < p->value.size(); ++i) CHECK(p->value[i] == solo[i]);
    }
    const auto jk = joint_kits[0].params();
    const auto sk = solo_kits[0].params();
    REQUIRE(jk.size() == sk.size());
    for (size_t k = 0; k < jk.size(); ++k) {
        for (size_t i = 0; i < jk[k]->value.size(); ++i) {
            CHECK(jk[k]->value[i] == sk[k]->value[i]);
        }
    }
}

TEST_CASE("correlated domains transfer positively versus anti-correlated, shared path") {
    // Both domains forced through one path (full sharing). With shared
    // patterns the domains help each other; with label-shifted patterns they
    // interfere. Averaged over 5 seeds.
    SearchSpaceSpec spec = singleton_space();
    double corr_acc = 0.0, anti_acc = 0.0;
    for (uint64_t seed = 0; seed < 5; ++seed) {
        for (double coeff : {1.0, -1.0}) {
            DomainFamilySpec family = tiny_family(2, 0.02, 400 + seed);
            family.class_counts = {4, 4};
            family.correlations = {{0, 1, coeff}};
            family.train_per_class = 12;
            auto datasets = generate(family);

            SearchConfig cfg = tiny_config(SearchMode::MPNAS, 500 + seed);
            cfg.train_epochs = 1;
            cfg.train_steps_per_epoch = 400;

            PathSelection p;
            p.space_hash = spec.hash();
            for (const auto& d : compile(spec)) p.choices[d.id] = 0;

            auto result = train_joint_model(spec, datasets, {p, p}, cfg, 600 + seed);
            const double mean_acc = (result.val_accuracy[0] + result.val_accuracy[1]) / 2.0;
            if (coeff > 0) {
                corr_acc += mean_acc;
            } else {
                anti_acc += mean_acc;
            }
        }
    }
    CHECK(corr_acc / 5.0 > anti_acc / 5.0);
}

TEST_CASE("sdnas: independent searches produce one path per domain") {
    auto datasets = generate(tiny_family(2, 0.05, 31));
    SearchConfig cfg = tiny_config(SearchMode::SD_NAS, 32);
    cfg.steps_per_epoch = 5;
    auto phase = run_search_phase(tiny_space(), datasets, cfg);
    REQUIRE(phase.path_sets.size() == 1);
    CHECK(phase.path_sets[0].size() == 2);

    auto trained = run_train_phase(tiny_space(), datasets, cfg, phase.path_sets);
    CHECK(trained.mean_test_accuracy.size() == 2);
}

TEST_CASE("search engine rejects mismatched dataset resolution") {
    auto datasets = generate(tiny_family(1, 0.05, 33));
    SearchConfig cfg = tiny_config(SearchMode::MPNAS, 34);
    cfg.resolution = 16;  // datasets are 8x8
    CHECK_THROWS_AS(SearchEngine(tiny_space(), &datasets, cfg), SpecError);
}
