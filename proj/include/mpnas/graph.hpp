// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <vector>

#include "mpnas/layers.hpp"

namespace mpnas {

// Ordered chain of layers with reverse-mode differentiation. The topology is
// fixed once built; parameters may alias a super-network's shared store.
class ComputeGraph {
public:
    ComputeGraph() = default;
    ComputeGraph(ComputeGraph&&) = default;
    ComputeGraph& operator=(ComputeGraph&&) = default;

    void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
    size_t layer_count() const { return layers_.size(); }

    // Declared input shape [H, W, C]; -1 leaves a dimension unchecked.
    void set_input_spec(int h, int w, int c);

    // Runs the chain, checking finiteness of the output. Caches activations
    // for backward.
    Tensor forward(const Tensor& input);

    // Accumulates dLoss/dParam into every parameter's gradient buffer
    // (additive across calls until zero_grads) and returns dLoss/dInput.
    // Requires a prior forward.
    Tensor backward(const Tensor& output_grad);

    // Unique parameters in first-use order.
    std::vector<ParamPtr> parameters() const;

    void zero_grads();

    // Element-level activity over all layers (prefix slices).
    ActiveMask active_mask() const;
    // Total number of weight elements the graph actually uses.
    long long active_param_count() const;

private:
    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<int> input_spec_;  // empty = unchecked
    bool has_forward_ = false;
};

// Softmax cross-entropy over [N, C] logits, mean-reduced over the batch.
struct LossResult {
    float loss = 0.f;
    Tensor logits_grad;  // dLoss/dlogits, already divided by N
};

LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

// Fraction of rows whose argmax (lowest index on ties) equals the label.
float accuracy(const Tensor& logits, const std::vector<int>& labels);

}  // namespace mpnas
