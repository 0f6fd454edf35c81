// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "mpnas/supernet.hpp"

#include <algorithm>
#include <set>

#include "mpnas/errors.hpp"

namespace mpnas {

std::vector<ParamPtr> DomainKit::params() const {
    std::vector<ParamPtr> out;
    for (const auto& p : {stem_pw_w, stem_pw_b, stem_dw_w, stem_dw_b, hidden_w, hidden_b, head_w,
                          head_b}) {
        if (p) out.push_back(p);
    }
    return out;
}

SuperNetwork::SuperNetwork(SearchSpaceSpec spec, uint64_t weight_seed) : spec_(std::move(spec)) {
    spec_.validate();
    space_hash_ = spec_.hash();
    decisions_ = compile(spec_);
    allocs_ = block_allocations(spec_);
    allocate();
    reinitialize(weight_seed);
}

void SuperNetwork::allocate() {
    auto add = [this](const std::string& name, std::vector<int> shape, int fan_in) {
        store_[name] = std::make_shared<Parameter>(name, std::move(shape));
        fan_in_[name] = fan_in;
    };
    const bool bias = spec_.use_bias;

    for (size_t b = 0; b < spec_.blocks.size(); ++b) {
        const auto& blk = spec_.blocks[b];
        const auto& alloc = allocs_[b];
        const int bi = static_cast<int>(b);
        for (int l = 0; l < alloc.max_layers; ++l) {
            const int lin_max = (l == 0) ? alloc.in_max : alloc.out_max;
            const int hidden_max = alloc.expansion_max * lin_max;
            for (int e : blk.expansion_choices) {
                const int h = e * lin_max;
                if (e > 1) {
                    add(pname::expand_w(bi, l, e), {h, lin_max}, lin_max);
                    if (bias) add(pname::expand_b(bi, l, e), {h}, 1);
                }
                add(pname::project_w(bi, l, e), {alloc.out_max, h}, h);
                if (bias) add(pname::project_b(bi, l, e), {alloc.out_max}, 1);
            }
            for (int k : blk.kernel_choices) {
                add(pname::dw_w(bi, l, k), {hidden_max, k, k}, k * k);
                if (bias) add(pname::dw_b(bi, l, k), {hidden_max}, 1);
            }
            if (alloc.has_se_option) {
                const int mid_max = se_mid_channels(hidden_max);
                add(pname::se_fc1_w(bi, l), {mid_max, hidden_max}, hidden_max);
                if (bias) add(pname::se_fc1_b(bi, l), {mid_max}, 1);
                add(pname::se_fc2_w(bi, l), {hidden_max, mid_max}, mid_max);
                if (bias) add(pname::se_fc2_b(bi, l), {hidden_max}, 1);
            }
        }
    }
}

void SuperNetwork::reinitialize(uint64_t weight_seed) {
    for (auto& [name, p] : store_) {
        if (name.ends_with(".b")) {
            p->value.zero();
        } else {
            init_fan_in_uniform(*p, fan_in_.at(name), weight_seed);
        }
        p->grad.zero();
    }
}

ParamPtr SuperNetwork::param(const std::string& name) const {
    auto it = store_.find(name);
    require(it != store_.end(), "supernet: unknown parameter " + name);
    return it->second;
}

std::vector<ParamPtr> SuperNetwork::all_params() const {
    std::vector<ParamPtr> out;
    out.reserve(store_.size());
    for (const auto& [name, p] : store_) {
        (void)name;
        out.push_back(p);
    }
    return out;
}

PathSelection SuperNetwork::random_path(Rng& rng) const {
    return uniform_random_path(decisions_, space_hash_, rng);
}

DomainKit SuperNetwork::make_kit(int classes, const std::string& name, uint64_t weight_seed) const {
    require<SpecError>(classes > 0, "kit: class count must be positive");
    const bool bias = spec_.use_bias;
    const int feat_max = feature_max_channels(spec_);
    DomainKit kit;
    kit.classes = classes;
    kit.stem_pw_w = std::make_shared<Parameter>(
        name + ".stem.pw.w", std::vector<int>{spec_.stem.filters, spec_.input_channels});
    kit.stem_dw_w =
        std::make_shared<Parameter>(name + ".stem.dw.w", std::vector<int>{spec_.stem.filters, 3, 3});
    kit.hidden_w = std::make_shared<Parameter>(
        name + ".head.hidden.w", std::vector<int>{spec_.head_hidden_size, feat_max});
    kit.head_w = std::make_shared<Parameter>(name + ".head.w",
                                             std::vector<int>{classes, spec_.head_hidden_size});
    if (bias) {
        kit.stem_pw_b =
            std::make_shared<Parameter>(name + ".stem.pw.b", std::vector<int>{spec_.stem.filters});
        kit.stem_dw_b =
            std::make_shared<Parameter>(name + ".stem.dw.b", std::vector<int>{spec_.stem.filters});
        kit.hidden_b = std::make_shared<Parameter>(name + ".head.hidden.b",
                                                   std::vector<int>{spec_.head_hidden_size});
        kit.head_b = std::make_shared<Parameter>(name + ".head.b", std::vector<int>{classes});
    }
    init_fan_in_uniform(*kit.stem_pw_w, spec_.input_channels, weight_seed);
    init_fan_in_uniform(*kit.stem_dw_w, 9, weight_seed);
    init_fan_in_uniform(*kit.hidden_w, feat_max, weight_seed);
    init_fan_in_uniform(*kit.head_w, spec_.head_hidden_size, weight_seed);
    return kit;
}

ComputeGraph SuperNetwork::instantiate(const PathSelection& path, const DomainKit& kit) const {
    require<SpecError>(kit.stem_pw_w && kit.stem_dw_w && kit.hidden_w && kit.head_w &&
                           kit.classes > 0,
                       "instantiate: incomplete domain kit");
    PathStructure ps = resolve_structure(spec_, decisions_, path);
    const bool bias = spec_.use_bias;
    auto maybe = [&](const std::string& name) -> ParamPtr { return bias ? param(name) : nullptr; };

    ComputeGraph g;
    g.set_input_spec(-1, -1, spec_.input_channels);
    g.add(std::make_unique<PointwiseConv>(kit.stem_pw_w, kit.stem_pw_b, spec_.input_channels,
                                          spec_.stem.filters));
    g.add(std::make_unique<HardSwish>());
    g.add(std::make_unique<DepthwiseConv>(kit.stem_dw_w, kit.stem_dw_b, spec_.stem.filters, 3,
                                          spec_.stem.stride));
    g.add(std::make_unique<HardSwish>());

    for (const auto& ls : ps.layers) {
        std::vector<std::unique_ptr<Layer>> body;
        if (ls.expansion > 1) {
            body.push_back(std::make_unique<PointwiseConv>(
                param(pname::expand_w(ls.block, ls.layer, ls.expansion)),
                maybe(pname::expand_b(ls.block, ls.layer, ls.expansion)), ls.in_c, ls.hidden));
            body.push_back(std::make_unique<HardSwish>());
        }
        body.push_back(std::make_unique<DepthwiseConv>(
            param(pname::dw_w(ls.block, ls.layer, ls.kernel)),
            maybe(pname::dw_b(ls.block, ls.layer, ls.kernel)), ls.hidden, ls.kernel, ls.stride));
        body.push_back(std::make_unique<HardSwish>());
        if (ls.se) {
            body.push_back(std::make_unique<SqueezeExcite>(
                param(pname::se_fc1_w(ls.block, ls.layer)), maybe(pname::se_fc1_b(ls.block, ls.layer)),
                param(pname::se_fc2_w(ls.block, ls.layer)), maybe(pname::se_fc2_b(ls.block, ls.layer)),
                ls.hidden, ls.se_mid));
        }
        body.push_back(std::make_unique<PointwiseConv>(
            param(pname::project_w(ls.block, ls.layer, ls.expansion)),
            maybe(pname::project_b(ls.block, ls.layer, ls.expansion)), ls.hidden, ls.out_c));
        if (ls.residual) {
            g.add(std::make_unique<Residual>(std::move(body)));
        } else {
            for (auto& l : body) g.add(std::move(l));
        }
    }

    g.add(std::make_unique<GlobalAveragePool>());
    g.add(std::make_unique<Dense>(kit.hidden_w, kit.hidden_b, ps.feature_channels,
                                  spec_.head_hidden_size));
    g.add(std::make_unique<HardSwish>());
    g.add(std::make_unique<Dense>(kit.head_w, kit.head_b, spec_.head_hidden_size, kit.classes));
    return g;
}

std::vector<std::string> SuperNetwork::path_node_ids(const PathSelection& path) const {
    path.validate_for(decisions_, space_hash_);
    std::vector<std::string> ids;
    ids.reserve(decisions_.size());
    for (const auto& d : decisions_) {
        ids.push_back(d.id + "." + std::to_string(path.option_index(d.id)));
    }
    return ids;
}

JointModel::JointModel(const SuperNetwork& net, std::vector<PathSelection> paths,
                       std::vector<DomainKit> kits)
    : net_(&net), paths_(std::move(paths)), kits_(std::move(kits)) {
    require<SpecError>(!paths_.empty(), "merge: path list must be non-empty");
    require<SpecError>(paths_.size() == kits_.size(), "merge: one kit per domain required");

    std::map<std::string, std::vector<int>> uses;
    for (size_t d = 0; d < paths_.size(); ++d) {
        for (const auto& id : net_->path_node_ids(paths_[d])) {
            uses[id].push_back(static_cast<int>(d));
        }
    }
    for (auto& [id, domains] : uses) {
        nodes_.push_back(NodeUse{id, domains});
    }

    graphs_.reserve(paths_.size());
    for (size_t d = 0; d < paths_.size(); ++d) {
        graphs_.push_back(net_->instantiate(paths_[d], kits_[d]));
    }
}

Tensor JointModel::domain_forward(int domain, const Tensor& batch) {
    require<SpecError>(domain >= 0 && domain < domain_count(), "joint: domain index out of range");
    return graphs_[static_cast<size_t>(domain)].forward(batch);
}

ComputeGraph& JointModel::domain_graph(int domain) {
    require<SpecError>(domain >= 0 && domain < domain_count(), "joint: domain index out of range");
    return graphs_[static_cast<size_t>(domain)];
}

std::vector<ParamPtr> JointModel::parameters() const {
    std::vector<ParamPtr> all;
    for (const auto& g : graphs_) {
        for (const auto& p : g.parameters()) all.push_back(p);
    }
    std::vector<ParamPtr> unique;
    std::set<const Parameter*> seen;
    for (auto& p : all) {
        if (seen.insert(p.get()).second) unique.push_back(p);
    }
    return unique;
}

JointModel merge(const SuperNetwork& net, std::vector<PathSelection> paths,
                 std::vector<DomainKit> kits) {
    return JointModel(net, std::move(paths), std::move(kits));
}

}  // namespace mpnas
