// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "mpnas/graph.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "mpnas/errors.hpp"

namespace mpnas {

void ComputeGraph::set_input_spec(int h, int w, int c) {
    input_spec_ = {h, w, c};
}

Tensor ComputeGraph::forward(const Tensor& input) {
    if (!input_spec_.empty()) {
        auto ok = [](int spec, int got) { return spec < 0 || spec == got; };
        require<ShapeError>(input.rank() == 4 && ok(input_spec_[0], input.dim(1)) &&
                                ok(input_spec_[1], input.dim(2)) && ok(input_spec_[2], input.dim(3)),
                            "graph: input shape " + input.shape_str() + " does not match declared [" +
                                std::to_string(input_spec_[0]) + "," + std::to_string(input_spec_[1]) +
                                "," + std::to_string(input_spec_[2]) + "]");
    }
    input.check_finite("graph input");
    Tensor x = input;
    for (auto& l : layers_) {
        x = l->forward(x);
        x.check_finite(l->name() + " output");
    }
    has_forward_ = true;
    return x;
}

Tensor ComputeGraph::backward(const Tensor& output_grad) {
    require<Error>(has_forward_, "graph: backward called before forward");
    output_grad.check_finite("loss gradient");
    Tensor g = output_grad;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        g = (*it)->backward(g);
        g.check_finite((*it)->name() + " input gradient");
    }
    return g;
}

std::vector<ParamPtr> ComputeGraph::parameters() const {
    std::vector<ParamPtr> all;
    for (const auto& l : layers_) l->collect_params(all);
    std::vector<ParamPtr> unique;
    std::unordered_set<const Parameter*> seen;
    for (auto& p : all) {
        if (seen.insert(p.get()).second) unique.push_back(p);
    }
    return unique;
}

void ComputeGraph::zero_grads() {
    for (auto& p : parameters()) p->grad.zero();
}

ActiveMask ComputeGraph::active_mask() const {
    ActiveMask mask;
    for (const auto& l : layers_) l->mark_active(mask);
    return mask;
}

long long ComputeGraph::active_param_count() const {
    long long n = 0;
    for (const auto& [p, m] : active_mask()) {
        (void)p;
        for (uint8_t v : m) n += v;
    }
    return n;
}

LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    require<ShapeError>(logits.rank() == 2, "softmax_cross_entropy: expected [N,C] logits");
    const int n = logits.dim(0), c = logits.dim(1);
    require<ShapeError>(static_cast<int>(labels.size()) == n,
                        "softmax_cross_entropy: label count mismatch");
    LossResult result;
    result.logits_grad = Tensor({n, c});
    double total = 0.0;
    for (int b = 0; b < n; ++b) {
        const int label = labels[static_cast<size_t>(b)];
        require<Error>(label >= 0 && label < c, "softmax_cross_entropy: label out of range");
        const float* row = logits.data() + static_cast<size_t>(b) * c;
        float m = row[0];
        for (int j = 1; j < c; ++j) m = std::max(m, row[j]);
        double sum = 0.0;
        for (int j = 0; j < c; ++j) sum += std::exp(static_cast<double>(row[j] - m));
        const double lse = std::log(sum);
        total += lse - static_cast<double>(row[label] - m);
        float* grow = result.logits_grad.data() + static_cast<size_t>(b) * c;
        for (int j = 0; j < c; ++j) {
            const double p = std::exp(static_cast<double>(row[j] - m)) / sum;
            grow[j] = static_cast<float>(p / n);
        }
        grow[label] -= 1.f / static_cast<float>(n);
    }
    result.loss = static_cast<float>(total / n);
    result.logits_grad.check_finite("softmax_cross_entropy gradient");
    require<NumericsError>(std::isfinite(result.loss), "non-finite loss");
    return result;
}

float accuracy(const Tensor& logits, const std::vector<int>& labels) {
    require<ShapeError>(logits.rank() == 2, "accuracy: expected [N,C] logits");
    const int n = logits.dim(0), c = logits.dim(1);
    require<ShapeError>(static_cast<int>(labels.size()) == n, "accuracy: label count mismatch");
    int hits = 0;
    for (int b = 0; b < n; ++b) {
        const float* row = logits.data() + static_cast<size_t>(b) * c;
        int best = 0;
        for (int j = 1; j < c; ++j) {
            if (row[j] > row[best]) best = j;
        }
        if (best == labels[static_cast<size_t>(b)]) ++hits;
    }
    return n > 0 ? static_cast<float>(hits) / static_cast<float>(n) : 0.f;
}

}  // namespace mpnas
