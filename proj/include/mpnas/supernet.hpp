// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mpnas/block_structure.hpp"
#include "mpnas/graph.hpp"
#include "mpnas/rng.hpp"
#include "mpnas/search_space.hpp"

namespace mpnas {

// Per-domain unshared layers: the fixed stem, the head-hidden dense layer,
// and the classifier. Candidate nodes are the only cross-domain shared
// weights, so fully disjoint paths share nothing.
struct DomainKit {
    ParamPtr stem_pw_w, stem_pw_b;
    ParamPtr stem_dw_w, stem_dw_b;
    ParamPtr hidden_w, hidden_b;
    ParamPtr head_w, head_b;
    int classes = 0;

    std::vector<ParamPtr> params() const;
};

// Weight-sharing super-network over the candidate nodes of the compiled
// space. Every option's weights live in one named store; graphs instantiated
// from paths alias those tensors and use prefix slices, so gradient updates
// flow back into the shared weights.
class SuperNetwork {
public:
    SuperNetwork(SearchSpaceSpec spec, uint64_t weight_seed);

    const SearchSpaceSpec& spec() const { return spec_; }
    const std::vector<DecisionPoint>& decisions() const { return decisions_; }
    uint64_t space_hash() const { return space_hash_; }

    // Uniform-random valid path.
    PathSelection random_path(Rng& rng) const;

    // Builds the concrete sub-model for a path. Candidate parameters alias
    // the shared store; the kit supplies the domain's stem/head layers.
    ComputeGraph instantiate(const PathSelection& path, const DomainKit& kit) const;

    // Freshly allocated per-domain kit, fan-in initialized from the seed.
    DomainKit make_kit(int classes, const std::string& name, uint64_t weight_seed) const;

    // Re-initializes the shared candidate store (training from scratch).
    void reinitialize(uint64_t weight_seed);

    // Candidate-node ids selected by a path: one "b{block}.{role}.{option}"
    // per decision. Kits (stem/heads) are not candidate nodes.
    std::vector<std::string> path_node_ids(const PathSelection& path) const;

    const std::map<std::string, ParamPtr>& store() const { return store_; }
    ParamPtr param(const std::string& name) const;
    std::vector<ParamPtr> all_params() const;

private:
    void allocate();

    SearchSpaceSpec spec_;
    uint64_t space_hash_ = 0;
    std::vector<DecisionPoint> decisions_;
    std::vector<BlockAllocation> allocs_;
    std::map<std::string, ParamPtr> store_;
    std::map<std::string, int> fan_in_;
};

// Per-node usage in a merged model.
struct NodeUse {
    std::string node_id;
    std::vector<int> domains;  // ascending domain indices that selected it
};

// Union of the selected per-domain paths over one super-network. Shared
// nodes alias one weight tensor; unselected candidates are simply absent.
class JointModel {
public:
    JointModel(const SuperNetwork& net, std::vector<PathSelection> paths,
               std::vector<DomainKit> kits);

    int domain_count() const { return static_cast<int>(paths_.size()); }
    const std::vector<PathSelection>& paths() const { return paths_; }
    const std::vector<DomainKit>& kits() const { return kits_; }
    std::vector<DomainKit>& kits() { return kits_; }
    const SuperNetwork& net() const { return *net_; }

    // Every node selected by at least one domain, with the domains using it.
    const std::vector<NodeUse>& nodes() const { return nodes_; }

    // Forward of `domain`'s own path plus its kit; identical to a standalone
    // instantiation with the same weights.
    Tensor domain_forward(int domain, const Tensor& batch);
    ComputeGraph& domain_graph(int domain);

    // Parameters of all per-domain graphs, deduped.
    std::vector<ParamPtr> parameters() const;

private:
    const SuperNetwork* net_;
    std::vector<PathSelection> paths_;
    std::vector<DomainKit> kits_;
    std::vector<ComputeGraph> graphs_;
    std::vector<NodeUse> nodes_;
};

// Merges one selected path per domain into a joint multi-path model.
JointModel merge(const SuperNetwork& net, std::vector<PathSelection> paths,
                 std::vector<DomainKit> kits);

}  // namespace mpnas
