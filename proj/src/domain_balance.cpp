// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "mpnas/domain_balance.hpp"

#include <atomic>
#include <cmath>
#include <iostream>

#include "mpnas/errors.hpp"

namespace mpnas {

void BoostingSchedule::validate() const {
    require<SpecError>(w_max >= w_min && w_min > 0.0,
                       "balance: requires w_max >= w_min > 0");
    require<SpecError>(loss_cap > 0.0, "balance: loss_cap must be positive");
    if (kind == BoostKind::EmpiricalWeights) {
        require<SpecError>(!empirical_weights.empty(),
                           "balance: empirical kind requires balance.weights");
        for (double w : empirical_weights) {
            require<SpecError>(w > 0.0, "balance: empirical weights must be strictly positive");
        }
    }
}

BoostingSchedule BoostingSchedule::identity() {
    BoostingSchedule s;
    s.kind = BoostKind::Identity;
    s.direction = BoostDirection::Constant;
    return s;
}

BoostingSchedule BoostingSchedule::from_name(const std::string& name) {
    BoostingSchedule s;
    if (name == "identity") {
        s.kind = BoostKind::Identity;
        s.direction = BoostDirection::Constant;
    } else if (name == "quadratic") {
        s.kind = BoostKind::Quadratic;
        s.direction = BoostDirection::Constant;
    } else if (name == "exp-const") {
        s.kind = BoostKind::Exponential;
        s.direction = BoostDirection::Constant;
    } else if (name == "exp-decay") {
        s.kind = BoostKind::Exponential;
        s.direction = BoostDirection::Decay;
    } else if (name == "exp-increase") {
        s.kind = BoostKind::Exponential;
        s.direction = BoostDirection::Increase;
    } else if (name == "empirical") {
        s.kind = BoostKind::EmpiricalWeights;
        s.direction = BoostDirection::Constant;
    } else {
        throw SpecError("balance: unknown schedule name '" + name + "'");
    }
    return s;
}

std::string BoostingSchedule::name() const {
    switch (kind) {
        case BoostKind::Identity: return "identity";
        case BoostKind::Quadratic: return "quadratic";
        case BoostKind::EmpiricalWeights: return "empirical";
        case BoostKind::Exponential:
            switch (direction) {
                case BoostDirection::Constant: return "exp-const";
                case BoostDirection::Decay: return "exp-decay";
                case BoostDirection::Increase: return "exp-increase";
            }
    }
    return "?";
}

double coefficient(const BoostingSchedule& schedule, double progress) {
    schedule.validate();
    require<SpecError>(progress >= 0.0 && progress <= 1.0,
                       "balance: progress must lie in [0,1]");
    switch (schedule.direction) {
        case BoostDirection::Decay:
            return schedule.w_max + progress * (schedule.w_min - schedule.w_max);
        case BoostDirection::Increase:
            return schedule.w_min + progress * (schedule.w_max - schedule.w_min);
        case BoostDirection::Constant:
        default:
            return schedule.w_max;
    }
}

LossTransform transform_losses(const std::vector<double>& losses,
                               const BoostingSchedule& schedule, double progress) {
    schedule.validate();
    require<SpecError>(!losses.empty(), "balance: empty loss vector");
    for (double l : losses) {
        require<NumericsError>(std::isfinite(l), "balance: non-finite domain loss");
        require<SpecError>(l >= 0.0, "balance: domain losses must be non-negative");
    }
    LossTransform out;
    out.w = coefficient(schedule, progress);
    out.weights.resize(losses.size());

    static std::atomic<bool> clamp_warned{false};
    switch (schedule.kind) {
        case BoostKind::Identity:
            for (size_t i = 0; i < losses.size(); ++i) {
                out.total += losses[i];
                out.weights[i] = 1.0;
            }
            break;
        case BoostKind::Quadratic:
            for (size_t i = 0; i < losses.size(); ++i) {
                out.total += losses[i] * losses[i];
                out.weights[i] = 2.0 * losses[i];
            }
            break;
        case BoostKind::Exponential:
            for (size_t i = 0; i < losses.size(); ++i) {
                double l = losses[i];
                if (l > schedule.loss_cap) {
                    l = schedule.loss_cap;
                    out.clamped = true;
                    if (!clamp_warned.exchange(true)) {
                        std::cerr << "[balance] domain loss " << losses[i]
                                  << " clamped at cap " << schedule.loss_cap << "\n";
                    }
                }
                const double h = std::exp(l / out.w);
                out.total += h;
                out.weights[i] = h / out.w;
            }
            break;
        case BoostKind::EmpiricalWeights:
            require<SpecError>(schedule.empirical_weights.size() == losses.size(),
                               "balance: weight vector length must equal domain count");
            for (size_t i = 0; i < losses.size(); ++i) {
                out.total += schedule.empirical_weights[i] * losses[i];
                out.weights[i] = schedule.empirical_weights[i];
            }
            break;
    }
    return out;
}

double empirical_weighted_loss(const std::vector<double>& losses,
                               const std::vector<double>& weights) {
    require<SpecError>(losses.size() == weights.size(),
                       "balance: weight vector length must equal domain count");
    double total = 0.0;
    for (size_t i = 0; i < losses.size(); ++i) total += weights[i] * losses[i];
    return total;
}

}  // namespace mpnas
