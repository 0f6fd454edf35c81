// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "mpnas/analysis.hpp"
#include "mpnas/cost_model.hpp"
#include "mpnas/errors.hpp"
#include "mpnas/rng.hpp"
#include "mpnas/supernet.hpp"

using namespace mpnas;

namespace {

// One block, one forced choice everywhere: in=8 via stem filters.
SearchSpaceSpec bottleneck_spec(int kernel, int expansion, int filters, int se) {
    SearchSpaceSpec spec;
    spec.stem = StemSpec{8, 2};
    spec.head_hidden_size = 16;
    spec.input_channels = 1;
    spec.use_bias = false;
    spec.blocks = {BlockSpec{{1}, {kernel}, {expansion}, {filters}, {se}, 1}};
    return spec;
}

PathSelection only_path(const SearchSpaceSpec& spec) {
    PathSelection p;
    p.space_hash = spec.hash();
    for (const auto& d : compile(spec)) p.choices[d.id] = 0;
    return p;
}

}  // namespace

TEST_CASE("hand-counted inverted bottleneck: 800 params") {
    // in=8, expansion 4 (hidden 32), k=3, out=8, no SE, no bias:
    // expand 8*32 + depthwise 3*3*32 + project 32*8 = 800
    SearchSpaceSpec spec = bottleneck_spec(3, 4, 8, 0);
    CHECK(candidate_params(spec, only_path(spec)) == 800);
}

TEST_CASE("expansion 1 with k=1 degenerates to the pointwise project count") {
    SearchSpaceSpec spec = bottleneck_spec(1, 1, 8, 0);
    // no expand conv; depthwise 8*1*1 + project 8*8
    CHECK(candidate_params(spec, only_path(spec)) == 8 * 1 * 1 + 8 * 8);
}

TEST_CASE("params are monotone in filter count and expansion") {
    SearchSpaceSpec spec = SearchSpaceSpec::desk_default();
    auto decisions = compile(spec);
    Rng rng(17);
    for (int t = 0; t < 40; ++t) {
        PathSelection p = uniform_random_path(decisions, spec.hash(), rng);
        for (const auto& d : decisions) {
            if (d.role != DecisionRole::Filters && d.role != DecisionRole::Expansion) continue;
            const int idx = p.option_index(d.id);
            if (idx + 1 >= d.arity()) continue;
            PathSelection bigger = p;
            bigger.choices[d.id] = idx + 1;
            CHECK(params(spec, bigger, 4) >= params(spec, p, 4));
        }
    }
}

TEST_CASE("dense layer FLOPS: m->n costs 2*m*n") {
    macs::CountingScope scope;
    auto w = std::make_shared<Parameter>("w", std::vector<int>{6, 5});
    Dense d(w, nullptr, 5, 6);
    Tensor x({1, 5});
    d.forward(x);
    CHECK(2 * scope.value() == 2ULL * 5 * 6);
}

TEST_CASE("doubling resolution quadruples conv FLOPS in a stride-1 network") {
    SearchSpaceSpec spec = SearchSpaceSpec::desk_default();
    spec.stem.stride = 1;
    for (auto& b : spec.blocks) {
        b.stride = 1;
        b.layer_count_choices = {1, 2};
    }
    auto decisions = compile(spec);
    Rng rng(5);
    PathSelection p = uniform_random_path(decisions, spec.hash(), rng);
    FlopsBreakdown lo = flops(spec, p, 8, 4);
    FlopsBreakdown hi = flops(spec, p, 16, 4);
    CHECK(hi.pointwise_conv == 4 * lo.pointwise_conv);
    CHECK(hi.depthwise_conv == 4 * lo.depthwise_conv);
}

TEST_CASE("runtime multiply counting matches the FLOPS formulas, 20 random paths") {
    SearchSpaceSpec spec = SearchSpaceSpec::desk_default();
    SuperNetwork net(spec, 3);
    Rng rng(2718);
    for (int t = 0; t < 20; ++t) {
        PathSelection p = net.random_path(rng);
        const int classes = 2 + rng.next_int(7);
        DomainKit kit = net.make_kit(classes, "d0", 4);
        ComputeGraph g = net.instantiate(p, kit);
        Tensor batch({1, 16, 16, 1});
        for (size_t i = 0; i < batch.size(); ++i) batch[i] = rng.next_float();

        macs::CountingScope scope;
        g.forward(batch);
        const long long measured_flops = 2 * static_cast<long long>(scope.value());
        CHECK(measured_flops == flops(spec, p, 16, classes).total());
    }
}

TEST_CASE("reward: target latency gives the plain quality") {
    RewardConfig cfg;
    CHECK(reward(0.7, cfg.target_latency_ms, cfg) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(reward(0.0, 13.0, cfg) == 0.0);
}

TEST_CASE("reward: doubled latency at beta=-0.07, against the frozen oracle value") {
    RewardConfig cfg;  // T0 = 84, beta = -0.07
    // 0.7 * 2^(-0.07), evaluated with 30-digit arithmetic.
    const double expected = 0.666846598630756172250230416408;
    CHECK(reward(0.7, 2.0 * cfg.target_latency_ms, cfg) ==
          doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("reward input validation") {
    RewardConfig cfg;
    CHECK_THROWS_AS(reward(0.5, 0.0, cfg), SpecError);
    CHECK_THROWS_AS(reward(0.5, -1.0, cfg), SpecError);
    CHECK_THROWS_AS(reward(1.5, 10.0, cfg), SpecError);
    RewardConfig bad;
    bad.beta = 0.01;
    CHECK_THROWS_AS(reward(0.5, 10.0, bad), SpecError);
}

TEST_CASE("reward monotonicity over random triples") {
    Rng rng(777);
    for (int t = 0; t < 10000; ++t) {
        RewardConfig cfg;
        cfg.beta = -(0.01 + 0.5 * rng.next_double());
        cfg.target_latency_ms = 10.0 + 100.0 * rng.next_double();
        const double q = rng.next_double();
        const double lat = 1.0 + 200.0 * rng.next_double();
        const double dq = 0.01 + 0.2 * rng.next_double();
        const double dl = 1.0 + 50.0 * rng.next_double();
        if (q + dq <= 1.0) {
            CHECK(reward(q + dq, lat, cfg) > reward(q, lat, cfg));
        }
        if (q > 0.0) {
            CHECK(reward(q, lat + dl, cfg) < reward(q, lat, cfg));
        }
    }
}

TEST_CASE("latency: identity calibration maps the reference path to t0") {
    SearchSpaceSpec spec = SearchSpaceSpec::desk_default();
    LatencyCalibration cal = LatencyCalibration::identity(spec, 16, 84.0);
    CHECK(latency_estimate(spec, reference_path(spec), cal, 16) == doctest::Approx(84.0));
}

TEST_CASE("latency: a path skipping every block costs only the base term") {
    SearchSpaceSpec spec;
    spec.stem = StemSpec{4, 1};
    spec.head_hidden_size = 8;
    spec.blocks = {BlockSpec{{0, 1}, {3}, {2}, {4}, {0}, 1},
                   BlockSpec{{0, 1}, {3}, {2}, {4}, {0}, 1}};
    PathSelection p;
    p.space_hash = spec.hash();
    for (const auto& d : compile(spec)) p.choices[d.id] = 0;  // layer count 0 everywhere

    LatencyCalibration cal = LatencyCalibration::identity(spec, 16, 84.0);
    cal.base_ms = 0.5;
    CHECK(latency_estimate(spec, p, cal, 16) == doctest::Approx(0.5));
}

TEST_CASE("latency: per-type coefficients scale exactly") {
    SearchSpaceSpec spec = bottleneck_spec(3, 4, 8, 0);
    spec.blocks.push_back(spec.blocks[0]);  // 2-layer path across two blocks
    PathSelection p = only_path(spec);
    LatencyCalibration cal = LatencyCalibration::identity(spec, 16, 84.0);

    FlopsBreakdown blocks = block_flops(spec, p, 16);
    const double base = latency_estimate(spec, p, cal, 16);

    LatencyCalibration doubled = cal;
    doubled.coefficients["pointwise_conv"] = 2.0;
    const double scaled = latency_estimate(spec, p, doubled, 16);
    // Recomputed by hand: the pointwise share is counted twice.
    const double expected =
        base + static_cast<double>(blocks.pointwise_conv) / cal.flops_ref * cal.target_ms;
    CHECK(scaled == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("cost reduction: same disjoint paths give exactly zero reduction") {
    SearchSpaceSpec spec = SearchSpaceSpec::desk_default();
    SuperNetwork net(spec, 1);
    PathSelection a;
    PathSelection b;
    a.space_hash = b.space_hash = spec.hash();
    for (const auto& d : net.decisions()) {
        a.choices[d.id] = 0;
        b.choices[d.id] = 1;
    }
    CostReductionReport r = cost_reduction_report(spec, {a, b}, 16, {"d0", "d1"});
    CHECK(r.param_reduction == 0.0);
    CHECK(r.flops_reduction == 0.0);
    CHECK(r.joint_params == r.bundle_params);
}

TEST_CASE("cost reduction: two identical paths halve the candidate backbone") {
    SearchSpaceSpec spec = SearchSpaceSpec::desk_default();
    auto decisions = compile(spec);
    Rng rng(12);
    PathSelection p = uniform_random_path(decisions, spec.hash(), rng);
    CostReductionReport r = cost_reduction_report(spec, {p, p}, 16, {"d0", "d1"});
    // Exact value from union counting: the shared candidate tensors are
    // counted once; the per-domain kits are not shared.
    const long long cand = candidate_params(spec, p);
    const long long kit = params(spec, p) - cand;
    CHECK(r.bundle_params == 2 * (cand + kit));
    CHECK(r.joint_params == cand + 2 * kit);
    CHECK(r.param_reduction ==
          doctest::Approx(1.0 - static_cast<double>(cand + 2 * kit) / (2.0 * (cand + kit))));
}
