// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <unordered_map>
#include <vector>

#include "mpnas/layers.hpp"

namespace mpnas {

// RMSProp-style adaptive update without momentum, for super-network weights.
// Only entries with a non-zero accumulated gradient are touched: sampled
// paths hit exactly their active slices, so unsampled candidate weights must
// not move (weight decay included).
class RmsProp {
public:
    struct Options {
        float lr = 1e-2f;
        float rho = 0.9f;
        float eps = 1e-3f;
        float weight_decay = 0.f;
    };

    explicit RmsProp(Options opt) : opt_(opt) {}

    void step(const std::vector<ParamPtr>& params, float lr_scale = 1.f);

    const Options& options() const { return opt_; }

private:
    Options opt_;
    std::unordered_map<const Parameter*, Tensor> acc_;
};

// Adam with a constant learning rate, for controller logits.
class Adam {
public:
    struct Options {
        float lr = 0.165f;
        float beta1 = 0.9f;
        float beta2 = 0.999f;
        float eps = 1e-8f;
    };

    explicit Adam(Options opt) : opt_(opt) {}

    void step(const std::vector<ParamPtr>& params);

private:
    struct State {
        Tensor m, v;
        long t = 0;
    };
    Options opt_;
    std::unordered_map<const Parameter*, State> state_;
};

// Cosine decay from 1 at step 0 to 0 at total_steps.
float cosine_lr_scale(long step, long total_steps);

}  // namespace mpnas
