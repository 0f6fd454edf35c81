// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "mpnas/cost_model.hpp"
#include "mpnas/supernet.hpp"

namespace mpnas {

// Candidate-node id set of a path (option indices; heads excluded).
std::set<std::string> path_node_set(const std::vector<DecisionPoint>& decisions,
                                    const PathSelection& path);

// |A n B| / |A u B| over the two paths' selected-node sets; 1 when both are
// empty. Requires paths compiled from the same space.
double jaccard(const std::vector<DecisionPoint>& decisions, const PathSelection& a,
               const PathSelection& b);

// Symmetric, unit-diagonal, entries in [0,1].
struct SimilarityMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> values;

    void validate() const;
};

SimilarityMatrix similarity_matrix(const std::vector<DecisionPoint>& decisions,
                                   const std::vector<PathSelection>& paths,
                                   const std::vector<std::string>& labels);

// CSV with a header row of domain names; numeric round-trip is exact.
void write_matrix_csv(const SimilarityMatrix& m, const std::filesystem::path& file);
SimilarityMatrix read_matrix_csv(const std::filesystem::path& file);

struct SharingStats {
    int shared_nodes = 0;     // selected by >= 2 domains
    int exclusive_nodes = 0;  // selected by exactly 1
    std::vector<NodeUse> nodes;
};

SharingStats sharing_stats(const JointModel& joint);

struct CostReductionReport {
    long long joint_params = 0;
    long long bundle_params = 0;  // sum of standalone single-domain models
    long long joint_flops = 0;
    long long bundle_flops = 0;
    double param_reduction = 0.0;  // 1 - joint/bundle
    double flops_reduction = 0.0;
    std::vector<CostReport> per_domain;  // standalone cost of each domain's path
};

// Backbone counts (heads excluded): the joint model counts shared tensors
// once; the bundle deploys one standalone model per domain.
CostReductionReport cost_reduction_report(const SearchSpaceSpec& spec,
                                          const std::vector<PathSelection>& paths, int resolution,
                                          const std::vector<std::string>& labels);

}  // namespace mpnas
