// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "mpnas/domain_balance.hpp"
#include "mpnas/errors.hpp"
#include "mpnas/rng.hpp"

using namespace mpnas;

namespace {

BoostingSchedule exp_decay() {
    return BoostingSchedule::from_name("exp-decay");  // w_max 2, w_min 1
}

}  // namespace

TEST_CASE("decay schedule endpoints are exact at the defaults") {
    BoostingSchedule s = exp_decay();
    CHECK(coefficient(s, 0.0) == 2.0);
    CHECK(coefficient(s, 1.0) == 1.0);
    CHECK(coefficient(s, 0.5) == 1.5);
}

TEST_CASE("increase schedule mirrors decay") {
    BoostingSchedule s = BoostingSchedule::from_name("exp-increase");
    CHECK(coefficient(s, 0.0) == 1.0);
    CHECK(coefficient(s, 1.0) == 2.0);
}

TEST_CASE("constant schedule stays at w_max") {
    BoostingSchedule s = BoostingSchedule::from_name("exp-const");
    CHECK(coefficient(s, 0.0) == 2.0);
    CHECK(coefficient(s, 1.0) == 2.0);
}

TEST_CASE("progress outside [0,1] is rejected") {
    CHECK_THROWS_AS(coefficient(exp_decay(), -0.01), SpecError);
    CHECK_THROWS_AS(coefficient(exp_decay(), 1.01), SpecError);
}

TEST_CASE("identity kind reduces to the plain loss sum") {
    auto r = transform_losses({1.0, 2.0, 3.0}, BoostingSchedule::identity(), 0.3);
    CHECK(r.total == 6.0);  // bitwise: plain double sum
    CHECK(r.weights == std::vector<double>{1.0, 1.0, 1.0});
}

TEST_CASE("exponential weight at zero loss is 1/w") {
    BoostingSchedule s = BoostingSchedule::from_name("exp-const");
    s.w_max = s.w_min = 2.0;
    auto r = transform_losses({0.0}, s, 0.0);
    CHECK(r.weights[0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("exponential weight ratio equals exp((La-Lb)/w), hard domain favored") {
    BoostingSchedule s = BoostingSchedule::from_name("exp-const");
    s.w_max = s.w_min = 2.0;
    auto r = transform_losses({2.0, 1.0}, s, 0.0);
    // exp(0.5), evaluated with 30-digit arithmetic.
    const double expected = 1.64872127070012814684865078781;
    CHECK(r.weights[0] / r.weights[1] == doctest::Approx(expected).epsilon(1e-9));
    CHECK(r.weights[0] > r.weights[1]);
}

TEST_CASE("monotone prioritization: higher loss means strictly higher weight, ratio exact") {
    Rng rng(42);
    BoostingSchedule s = BoostingSchedule::from_name("exp-decay");
    for (int t = 0; t < 200; ++t) {
        const double la = 5.0 * rng.next_double();
        const double lb = 5.0 * rng.next_double();
        const double progress = rng.next_double();
        auto r = transform_losses({la, lb}, s, progress);
        if (la > lb) CHECK(r.weights[0] > r.weights[1]);
        if (lb > la) CHECK(r.weights[1] > r.weights[0]);
        const double ratio = r.weights[0] / r.weights[1];
        CHECK(ratio == doctest::Approx(std::exp((la - lb) / r.w)).epsilon(1e-9));
    }
}

TEST_CASE("adaptivity: under decay the hard/easy weight ratio grows with progress") {
    BoostingSchedule s = exp_decay();
    double prev_ratio = 0.0;
    for (double progress : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        auto r = transform_losses({2.5, 1.0}, s, progress);
        const double ratio = r.weights[0] / r.weights[1];
        CHECK(ratio > prev_ratio);
        prev_ratio = ratio;
    }
}

TEST_CASE("quadratic kind: h(L)=L^2, weight 2L") {
    BoostingSchedule s = BoostingSchedule::from_name("quadratic");
    auto r = transform_losses({1.5, 0.5}, s, 0.0);
    CHECK(r.total == doctest::Approx(1.5 * 1.5 + 0.25));
    CHECK(r.weights[0] == doctest::Approx(3.0));
    CHECK(r.weights[1] == doctest::Approx(1.0));
}

TEST_CASE("gradient consistency: finite differences of the total match the weights") {
    Rng rng(9);
    for (const char* name : {"identity", "quadratic", "exp-const", "exp-decay", "exp-increase"}) {
        BoostingSchedule s = BoostingSchedule::from_name(name);
        std::vector<double> losses = {0.5 + 2.0 * rng.next_double(), 0.5 + 2.0 * rng.next_double(),
                                      0.5 + 2.0 * rng.next_double()};
        const double progress = rng.next_double();
        auto r = transform_losses(losses, s, progress);
        const double eps = 1e-6;
        for (size_t i = 0; i < losses.size(); ++i) {
            auto lp = losses;
            auto lm = losses;
            lp[i] += eps;
            lm[i] -= eps;
            const double fd = (transform_losses(lp, s, progress).total -
                               transform_losses(lm, s, progress).total) /
                              (2 * eps);
            CHECK(std::fabs(fd - r.weights[i]) < 1e-5);
        }
    }
}

TEST_CASE("empirical weighted loss") {
    CHECK(empirical_weighted_loss({1.0, 1.0}, {1.0, 1.0}) == 2.0);
    CHECK(empirical_weighted_loss({1.0, 1.0}, {2.0, 1.0}) == 3.0);
    CHECK_THROWS_AS(empirical_weighted_loss({1.0}, {1.0, 2.0}), SpecError);

    BoostingSchedule s = BoostingSchedule::from_name("empirical");
    s.empirical_weights = {2.0, 1.0};
    auto r = transform_losses({1.0, 1.0}, s, 0.0);
    CHECK(r.total == 3.0);
    CHECK(r.weights[0] == 2.0);
    // gradient contribution scales linearly with the weight
    const double eps = 1e-6;
    const double fd =
        (transform_losses({1.0 + eps, 1.0}, s, 0.0).total - transform_losses({1.0 - eps, 1.0}, s, 0.0).total) /
        (2 * eps);
    CHECK(std::fabs(fd - 2.0) < 1e-6);
}

TEST_CASE("empirical kind validates the weight vector") {
    BoostingSchedule s = BoostingSchedule::from_name("empirical");
    CHECK_THROWS_AS(s.validate(), SpecError);  // weights required
    s.empirical_weights = {1.0, -1.0};
    CHECK_THROWS_AS(s.validate(), SpecError);  // strictly positive
    s.empirical_weights = {1.0, 2.0};
    CHECK_THROWS_AS(transform_losses({1.0, 1.0, 1.0}, s, 0.0), SpecError);  // length mismatch
}

TEST_CASE("exponential overflow guard clamps and flags") {
    BoostingSchedule s = BoostingSchedule::from_name("exp-const");
    s.loss_cap = 5.0;
    auto r = transform_losses({50.0}, s, 0.0);
    CHECK(r.clamped);
    CHECK(std::isfinite(r.total));
    CHECK(r.total == doctest::Approx(std::exp(5.0 / 2.0)));
}

TEST_CASE("invalid losses and schedules are rejected") {
    CHECK_THROWS_AS(transform_losses({-1.0}, BoostingSchedule::identity(), 0.0), SpecError);
    CHECK_THROWS_AS(transform_losses({std::nan("")}, BoostingSchedule::identity(), 0.0),
                    NumericsError);
    BoostingSchedule s;
    s.w_max = 1.0;
    s.w_min = 2.0;  // w_max < w_min
    CHECK_THROWS_AS(s.validate(), SpecError);
    CHECK_THROWS_AS(BoostingSchedule::from_name("nope"), SpecError);
}
