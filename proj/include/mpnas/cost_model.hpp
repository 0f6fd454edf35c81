// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "mpnas/block_structure.hpp"
#include "mpnas/search_space.hpp"

namespace mpnas {

// FLOPS by layer type, in floating-point operations (1 MAC = 2 FLOPS).
// Convention: bias adds, activations and residual adds are not counted;
// SE pooling and gating are (attributed to "se").
struct FlopsBreakdown {
    long long pointwise_conv = 0;
    long long depthwise_conv = 0;
    long long se = 0;
    long long pool = 0;
    long long dense = 0;

    long long total() const { return pointwise_conv + depthwise_conv + se + pool + dense; }
    FlopsBreakdown& operator+=(const FlopsBreakdown& o);
};

struct RewardConfig {
    double target_latency_ms = 84.0;
    double beta = -0.07;

    void validate() const;  // beta < 0, target > 0
};

// Latency proxy: affine in the FLOPS of the searched block layers, with
// optional per-layer-type coefficients. The fixed stem/head cost is path
// independent and belongs in base_ms.
struct LatencyCalibration {
    double base_ms = 0.0;
    double flops_ref = 0.0;
    double target_ms = 84.0;
    std::map<std::string, double> coefficients;  // default 1.0 per type

    double coefficient(const std::string& type) const;

    // flops_ref = block FLOPS of the reference path (max option everywhere)
    // so that the reference path lands exactly on target_ms.
    static LatencyCalibration identity(const SearchSpaceSpec& spec, int resolution,
                                       double target_ms = 84.0);
};

// The all-max-options path, used as the "1.0x" cost reference.
PathSelection reference_path(const SearchSpaceSpec& spec);

// Exact number of weight elements the instantiated graph uses for this path
// (prefix slices respected). head_classes == 0 counts the backbone only
// (stem + selected blocks + head-hidden layer, classifier excluded).
long long params(const SearchSpaceSpec& spec, const PathSelection& path, int head_classes = 0);

// Weights of the selected candidate (block) layers only, excluding the
// per-domain stem/head kit.
long long candidate_params(const SearchSpaceSpec& spec, const PathSelection& path);

// Exact FLOPS for one example at the given input resolution.
FlopsBreakdown flops(const SearchSpaceSpec& spec, const PathSelection& path, int resolution,
                     int head_classes = 0);

// FLOPS of the searched block layers only (the latency-relevant part).
FlopsBreakdown block_flops(const SearchSpaceSpec& spec, const PathSelection& path, int resolution);

// Eq.-style search reward: quality scaled by a latency penalty,
// r = q * (latency / target)^beta with beta < 0.
double reward(double quality, double latency_ms, const RewardConfig& cfg);

double latency_estimate(const SearchSpaceSpec& spec, const PathSelection& path,
                        const LatencyCalibration& cal, int resolution);
double latency_from_breakdown(const FlopsBreakdown& blocks, const LatencyCalibration& cal);

// Union-based counts for a merged multi-path model: tensors of shared nodes
// are counted once, at the union of the per-domain prefix slices.
// head_classes may be empty (backbone only) or give one entry per domain.
long long joint_params(const SearchSpaceSpec& spec, const std::vector<PathSelection>& paths,
                       const std::vector<int>& head_classes = {});
FlopsBreakdown joint_flops(const SearchSpaceSpec& spec, const std::vector<PathSelection>& paths,
                           int resolution, const std::vector<int>& head_classes = {});

// One emitted cost row (see the CLI's cost report file).
struct CostReport {
    std::string path_id;
    long long params = 0;
    long long flops = 0;
    double latency_ms = 0.0;
    double reward = 0.0;
};

}  // namespace mpnas
