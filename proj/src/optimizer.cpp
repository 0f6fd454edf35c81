// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "mpnas/optimizer.hpp"

#include <cmath>

#include "mpnas/errors.hpp"

namespace mpnas {

void RmsProp::step(const std::vector<ParamPtr>& params, float lr_scale) {
    const float lr = opt_.lr * lr_scale;
    for (const auto& p : params) {
        auto it = acc_.find(p.get());
        if (it == acc_.end()) {
            it = acc_.emplace(p.get(), Tensor(p->value.shape())).first;
        }
        Tensor& acc = it->second;
        for (size_t i = 0; i < p->value.size(); ++i) {
            const float g0 = p->grad[i];
            if (g0 == 0.f) continue;  // untouched by this step's paths
            const float g = g0 + opt_.weight_decay * p->value[i];
            acc[i] = opt_.rho * acc[i] + (1.f - opt_.rho) * g * g;
            p->value[i] -= lr * g / (std::sqrt(acc[i]) + opt_.eps);
        }
        p->value.check_finite("parameter " + p->name + " after update");
    }
}

void Adam::step(const std::vector<ParamPtr>& params) {
    for (const auto& p : params) {
        auto it = state_.find(p.get());
        if (it == state_.end()) {
            it = state_.emplace(p.get(), State{Tensor(p->value.shape()), Tensor(p->value.shape()), 0})
                     .first;
        }
        State& s = it->second;
        s.t += 1;
        const float bc1 = 1.f - std::pow(opt_.beta1, static_cast<float>(s.t));
        const float bc2 = 1.f - std::pow(opt_.beta2, static_cast<float>(s.t));
        for (size_t i = 0; i < p->value.size(); ++i) {
            const float g = p->grad[i];
            s.m[i] = opt_.beta1 * s.m[i] + (1.f - opt_.beta1) * g;
            s.v[i] = opt_.beta2 * s.v[i] + (1.f - opt_.beta2) * g * g;
            const float mh = s.m[i] / bc1;
            const float vh = s.v[i] / bc2;
            p->value[i] -= opt_.lr * mh / (std::sqrt(vh) + opt_.eps);
        }
        p->value.check_finite("parameter " + p->name + " after update");
    }
}

float cosine_lr_scale(long step, long total_steps) {
    require(total_steps > 0, "cosine_lr_scale: total_steps must be positive");
    if (step >= total_steps) return 0.f;
    const double x = static_cast<double>(step) / static_cast<double>(total_steps);
    return static_cast<float>(0.5 * (1.0 + std::cos(3.14159265358979323846 * x)));
}

}  // namespace mpnas
