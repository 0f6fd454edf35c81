// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace mpnas {

enum class BoostKind { Identity, Quadratic, Exponential, EmpiricalWeights };
enum class BoostDirection { Constant, Decay, Increase };

// Boosting function h over per-domain losses plus the schedule of its
// prioritization coefficient w. h'(L_i) is the effective gradient weight of
// domain i; monotone h means harder (higher-loss) domains are favored.
struct BoostingSchedule {
    BoostKind kind = BoostKind::Exponential;
    BoostDirection direction = BoostDirection::Decay;
    double w_max = 2.0;
    double w_min = 1.0;
    std::vector<double> empirical_weights;  // required for EmpiricalWeights
    double loss_cap = 20.0;                 // exponential overflow guard

    void validate() const;

    static BoostingSchedule identity();
    // Parses the CLI names: identity | quadratic | exp-const | exp-decay |
    // exp-increase | empirical.
    static BoostingSchedule from_name(const std::string& name);
    std::string name() const;
};

// w at the given training progress in [0,1]. Decay runs w_max -> w_min,
// Increase mirrors it, Constant stays at w_max.
double coefficient(const BoostingSchedule& schedule, double progress);

struct LossTransform {
    double total = 0.0;               // sum of h(L_i); regularization is the trainer's
    std::vector<double> weights;      // h'(L_i) per domain
    double w = 0.0;                   // coefficient used
    bool clamped = false;             // loss_cap hit (exponential only)
};

LossTransform transform_losses(const std::vector<double>& losses, const BoostingSchedule& schedule,
                               double progress);

// Plain weighted sum, one fixed weight per domain.
double empirical_weighted_loss(const std::vector<double>& losses,
                               const std::vector<double>& weights);

}  // namespace mpnas
