// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mpnas {

// Minimal unsigned big integer (base 1e9 limbs), enough to report exact path
// counts for spaces whose size exceeds 64 bits.
class BigUInt {
public:
    BigUInt() : limbs_{0} {}
    explicit BigUInt(uint64_t v);

    BigUInt& operator*=(uint64_t m);
    bool operator==(const BigUInt& other) const { return limbs_ == other.limbs_; }
    std::string to_string() const;

private:
    std::vector<uint32_t> limbs_;  // little-endian, base 1e9
};

// One searchable block of the MobileNetV3-like space. Choices are per block:
// every layer inside a block uses the block's selected kernel/expansion/SE.
struct BlockSpec {
    std::vector<int> layer_count_choices{1, 2};
    std::vector<int> kernel_choices{3, 5};
    std::vector<int> expansion_choices{1, 3, 6};
    std::vector<int> filter_choices{8, 16};
    std::vector<int> se_choices{0, 1};  // 0 = off, 1 = on
    int stride = 1;
};

struct StemSpec {
    int filters = 8;
    int stride = 2;
};

struct SearchSpaceSpec {
    StemSpec stem;
    std::vector<BlockSpec> blocks;
    int head_hidden_size = 64;
    int input_channels = 1;
    bool use_bias = true;

    // The shrunken default space: 4 blocks, <=2 layers per block,
    // kernels {3,5}, expansions {1,3,6}, two filter options per block.
    static SearchSpaceSpec desk_default();

    void validate() const;  // throws SpecError
    uint64_t hash() const;  // content hash over the canonical serialization
};

enum class DecisionRole { LayerCount, Kernel, Expansion, Filters, SqueezeExcite };

const char* role_name(DecisionRole role);

// One independent architectural choice. `options` holds the concrete values
// (layer counts, kernel sizes, expansions, filter counts, or 0/1 for SE).
struct DecisionPoint {
    std::string id;  // "b{block}.{role}", unique within the compiled space
    int block_index = 0;
    DecisionRole role = DecisionRole::LayerCount;
    std::vector<int> options;

    int arity() const { return static_cast<int>(options.size()); }
};

// Deterministic enumeration of all decision points of a valid spec. Arity-1
// (forced) decisions are retained.
std::vector<DecisionPoint> compile(const SearchSpaceSpec& spec);

// Product of all arities, exact.
BigUInt path_count(const SearchSpaceSpec& spec);

// One concrete choice per decision point: the architecture of one domain.
struct PathSelection {
    uint64_t space_hash = 0;
    std::map<std::string, int> choices;  // decision id -> option index

    int option_index(const std::string& decision_id) const;
    uint64_t hash() const;

    void validate_for(const std::vector<DecisionPoint>& decisions, uint64_t expected_space_hash) const;
};

// Looks up the selected option value for a decision.
int selected_value(const DecisionPoint& d, const PathSelection& path);

class Rng;

// One option drawn uniformly per decision.
PathSelection uniform_random_path(const std::vector<DecisionPoint>& decisions, uint64_t space_hash,
                                  Rng& rng);

}  // namespace mpnas
