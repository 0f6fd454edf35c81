// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "mpnas/block_structure.hpp"

#include <algorithm>

#include "mpnas/errors.hpp"

namespace mpnas {

std::vector<BlockAllocation> block_allocations(const SearchSpaceSpec& spec) {
    std::vector<BlockAllocation> out;
    int widest_in = spec.stem.filters;
    for (const auto& blk : spec.blocks) {
        BlockAllocation a;
        a.in_max = widest_in;
        a.out_max = *std::max_element(blk.filter_choices.begin(), blk.filter_choices.end());
        a.expansion_max = *std::max_element(blk.expansion_choices.begin(), blk.expansion_choices.end());
        a.max_layers = *std::max_element(blk.layer_count_choices.begin(), blk.layer_count_choices.end());
        a.can_skip = std::find(blk.layer_count_choices.begin(), blk.layer_count_choices.end(), 0) !=
                     blk.layer_count_choices.end();
        a.has_se_option = std::find(blk.se_choices.begin(), blk.se_choices.end(), 1) !=
                          blk.se_choices.end();
        out.push_back(a);
        // A skippable block passes its input through unchanged, so the next
        // block may see either this block's output or its input.
        widest_in = (a.can_skip || a.max_layers == 0) ? std::max(a.out_max, a.in_max) : a.out_max;
    }
    return out;
}

int feature_max_channels(const SearchSpaceSpec& spec) {
    auto allocs = block_allocations(spec);
    const auto& last = allocs.back();
    return (last.can_skip || last.max_layers == 0) ? std::max(last.out_max, last.in_max)
                                                   : last.out_max;
}

int se_mid_channels(int channels) { return std::max(1, channels / 4); }

PathStructure resolve_structure(const SearchSpaceSpec& spec,
                                const std::vector<DecisionPoint>& decisions,
                                const PathSelection& path) {
    path.validate_for(decisions, spec.hash());
    auto allocs = block_allocations(spec);

    PathStructure ps;
    ps.input_channels = spec.input_channels;
    ps.stem_filters = spec.stem.filters;
    ps.stem_stride = spec.stem.stride;
    ps.head_hidden = spec.head_hidden_size;

    // Decisions are emitted per block in role order: layers, kernel,
    // expansion, filters, se.
    int cur_c = spec.stem.filters;
    for (size_t b = 0; b < spec.blocks.size(); ++b) {
        const auto& blk = spec.blocks[b];
        const auto& alloc = allocs[b];
        const DecisionPoint& d_layers = decisions[b * 5 + 0];
        const DecisionPoint& d_kernel = decisions[b * 5 + 1];
        const DecisionPoint& d_exp = decisions[b * 5 + 2];
        const DecisionPoint& d_filters = decisions[b * 5 + 3];
        const DecisionPoint& d_se = decisions[b * 5 + 4];

        const int layer_count = selected_value(d_layers, path);
        const int kernel = selected_value(d_kernel, path);
        const int expansion = selected_value(d_exp, path);
        const int out_c = selected_value(d_filters, path);
        const bool se = selected_value(d_se, path) == 1;

        for (int l = 0; l < layer_count; ++l) {
            LayerStructure ls;
            ls.block = static_cast<int>(b);
            ls.layer = l;
            ls.in_c = (l == 0) ? cur_c : out_c;
            ls.in_max = (l == 0) ? alloc.in_max : alloc.out_max;
            ls.expansion = expansion;
            ls.expansion_max = alloc.expansion_max;
            ls.hidden = expansion * ls.in_c;
            ls.hidden_max = alloc.expansion_max * ls.in_max;
            ls.kernel = kernel;
            ls.stride = (l == 0) ? blk.stride : 1;
            ls.se = se;
            ls.se_mid = se_mid_channels(ls.hidden);
            ls.se_mid_max = se_mid_channels(ls.hidden_max);
            ls.out_c = out_c;
            ls.out_max = alloc.out_max;
            ls.residual = (ls.stride == 1 && ls.in_c == ls.out_c);
            ls.expansion_option = path.option_index(d_exp.id);
            ls.kernel_option = path.option_index(d_kernel.id);
            ps.layers.push_back(ls);
        }
        if (layer_count > 0) cur_c = out_c;
    }
    ps.feature_channels = cur_c;
    ps.feature_max = feature_max_channels(spec);
    return ps;
}

namespace pname {
namespace {
std::string base(int b, int l) { return "b" + std::to_string(b) + ".l" + std::to_string(l); }
}  // namespace
std::string expand_w(int b, int l, int e) { return base(b, l) + ".e" + std::to_string(e) + ".expand.w"; }
std::string expand_b(int b, int l, int e) { return base(b, l) + ".e" + std::to_string(e) + ".expand.b"; }
std::string project_w(int b, int l, int e) { return base(b, l) + ".e" + std::to_string(e) + ".project.w"; }
std::string project_b(int b, int l, int e) { return base(b, l) + ".e" + std::to_string(e) + ".project.b"; }
std::string dw_w(int b, int l, int k) { return base(b, l) + ".k" + std::to_string(k) + ".dw.w"; }
std::string dw_b(int b, int l, int k) { return base(b, l) + ".k" + std::to_string(k) + ".dw.b"; }
std::string se_fc1_w(int b, int l) { return base(b, l) + ".se.fc1.w"; }
std::string se_fc1_b(int b, int l) { return base(b, l) + ".se.fc1.b"; }
std::string se_fc2_w(int b, int l) { return base(b, l) + ".se.fc2.w"; }
std::string se_fc2_b(int b, int l) { return base(b, l) + ".se.fc2.b"; }
}  // namespace pname

}  // namespace mpnas
