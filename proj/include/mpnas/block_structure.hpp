// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "mpnas/search_space.hpp"

namespace mpnas {

// Concrete dimensions of one inverted-bottleneck layer under a path.
// Active dims are the slice the path uses; *_max dims are the allocation
// size of the shared tensors (prefix slicing).
struct LayerStructure {
    int block = 0;
    int layer = 0;  // index within the block
    int in_c = 0, in_max = 0;
    int expansion = 1, expansion_max = 1;
    int hidden = 0, hidden_max = 0;  // hidden = expansion * in_c; no expand conv when expansion == 1
    int kernel = 3;
    int stride = 1;
    bool se = false;
    int se_mid = 0, se_mid_max = 0;
    int out_c = 0, out_max = 0;
    bool residual = false;
    int expansion_option = 0, kernel_option = 0;  // selected option indices
};

struct PathStructure {
    int input_channels = 1;
    int stem_filters = 0, stem_stride = 1;
    std::vector<LayerStructure> layers;
    int feature_channels = 0;  // active channels entering the head
    int feature_max = 0;
    int head_hidden = 0;
};

// Allocation-time maxima per block (path independent).
struct BlockAllocation {
    int in_max = 0;   // widest possible input to the block's first layer
    int out_max = 0;  // max filter choice
    int expansion_max = 1;
    int max_layers = 0;
    bool can_skip = false;  // 0 is among the layer-count choices
    bool has_se_option = false;
};

std::vector<BlockAllocation> block_allocations(const SearchSpaceSpec& spec);

// Widest possible channel count entering the head (accounts for skippable blocks).
int feature_max_channels(const SearchSpaceSpec& spec);

// SE bottleneck width for a given channel count (reduction factor 4, min 1).
int se_mid_channels(int channels);

// Resolves the concrete layer stack a path selects. Requires a valid path.
PathStructure resolve_structure(const SearchSpaceSpec& spec,
                                const std::vector<DecisionPoint>& decisions,
                                const PathSelection& path);

// Parameter names in the shared weight store.
namespace pname {
std::string expand_w(int b, int l, int e);
std::string expand_b(int b, int l, int e);
std::string project_w(int b, int l, int e);
std::string project_b(int b, int l, int e);
std::string dw_w(int b, int l, int k);
std::string dw_b(int b, int l, int k);
std::string se_fc1_w(int b, int l);
std::string se_fc1_b(int b, int l);
std::string se_fc2_w(int b, int l);
std::string se_fc2_b(int b, int l);
}  // namespace pname

}  // namespace mpnas
