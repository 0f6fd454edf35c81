// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "mpnas/search_space.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "mpnas/errors.hpp"
#include "mpnas/rng.hpp"

namespace mpnas {

BigUInt::BigUInt(uint64_t v) {
    limbs_.clear();
    do {
        limbs_.push_back(static_cast<uint32_t>(v % 1000000000ULL));
        v /= 1000000000ULL;
    } while (v > 0);
}

BigUInt& BigUInt::operator*=(uint64_t m) {
    uint64_t carry = 0;
    for (auto& limb : limbs_) {
        // limb * m fits: limb < 1e9, m is split if large.
        unsigned __int128 prod = static_cast<unsigned __int128>(limb) * m + carry;
        limb = static_cast<uint32_t>(prod % 1000000000ULL);
        carry = static_cast<uint64_t>(prod / 1000000000ULL);
    }
    while (carry > 0) {
        limbs_.push_back(static_cast<uint32_t>(carry % 1000000000ULL));
        carry /= 1000000000ULL;
    }
    return *this;
}

std::string BigUInt::to_string() const {
    std::ostringstream os;
    os << limbs_.back();
    for (auto it = limbs_.rbegin() + 1; it != limbs_.rend(); ++it) {
        os.width(9);
        os.fill('0');
        os << *it;
    }
    return os.str();
}

const char* role_name(DecisionRole role) {
    switch (role) {
        case DecisionRole::LayerCount: return "layers";
        case DecisionRole::Kernel: return "kernel";
        case DecisionRole::Expansion: return "expansion";
        case DecisionRole::Filters: return "filters";
        case DecisionRole::SqueezeExcite: return "se";
    }
    return "?";
}

SearchSpaceSpec SearchSpaceSpec::desk_default() {
    SearchSpaceSpec spec;
    spec.stem = StemSpec{8, 2};
    spec.head_hidden_size = 64;
    spec.input_channels = 1;
    spec.use_bias = true;
    spec.blocks = {
        BlockSpec{{1, 2}, {3, 5}, {1, 3, 6}, {8, 12}, {0, 1}, 1},
        BlockSpec{{1, 2}, {3, 5}, {1, 3, 6}, {12, 16}, {0, 1}, 2},
        BlockSpec{{0, 1, 2}, {3, 5}, {1, 3, 6}, {16, 24}, {0, 1}, 1},
        BlockSpec{{1, 2}, {3, 5}, {1, 3, 6}, {24, 32}, {0, 1}, 2},
    };
    return spec;
}

namespace {

void check_choices(const std::vector<int>& v, const std::string& what) {
    require<SpecError>(!v.empty(), what + ": choice list must be non-empty");
    std::set<int> seen(v.begin(), v.end());
    require<SpecError>(seen.size() == v.size(), what + ": choice list has duplicates");
}

}  // namespace

void SearchSpaceSpec::validate() const {
    require<SpecError>(!blocks.empty(), "spec: at least one block required");
    require<SpecError>(stem.filters > 0, "spec: stem.filters must be positive");
    require<SpecError>(stem.stride == 1 || stem.stride == 2, "spec: stem.stride must be 1 or 2");
    require<SpecError>(head_hidden_size > 0, "spec: head_hidden_size must be positive");
    require<SpecError>(input_channels > 0, "spec: input_channels must be positive");
    for (size_t b = 0; b < blocks.size(); ++b) {
        const BlockSpec& blk = blocks[b];
        const std::string where = "block " + std::to_string(b);
        require<SpecError>(blk.stride == 1 || blk.stride == 2, where + ": stride must be 1 or 2");
        check_choices(blk.layer_count_choices, where + " layer_count_choices");
        check_choices(blk.kernel_choices, where + " kernel_choices");
        check_choices(blk.expansion_choices, where + " expansion_choices");
        check_choices(blk.filter_choices, where + " filter_choices");
        check_choices(blk.se_choices, where + " se_choices");
        for (int l : blk.layer_count_choices) {
            require<SpecError>(l >= 0, where + ": layer counts must be non-negative");
            require<SpecError>(l > 0 || blk.stride == 1,
                               where + ": layer count 0 (skip) only allowed with stride 1");
        }
        for (int k : blk.kernel_choices) {
            require<SpecError>(k > 0 && k % 2 == 1, where + ": kernel sizes must be odd, got " +
                                                        std::to_string(k));
        }
        for (int e : blk.expansion_choices) {
            require<SpecError>(e >= 1 && e <= 6, where + ": expansion " + std::to_string(e) +
                                                     " outside {1..6}");
        }
        require<SpecError>(std::is_sorted(blk.filter_choices.begin(), blk.filter_choices.end()),
                           where + ": filter_choices must be sorted ascending");
        for (int f : blk.filter_choices) {
            require<SpecError>(f > 0, where + ": filter counts must be positive");
        }
        for (int s : blk.se_choices) {
            require<SpecError>(s == 0 || s == 1, where + ": se choices must be 0 or 1");
        }
    }
}

uint64_t SearchSpaceSpec::hash() const {
    std::ostringstream os;
    os << "stem:" << stem.filters << "," << stem.stride << ";head:" << head_hidden_size
       << ";in:" << input_channels << ";bias:" << use_bias;
    for (const auto& blk : blocks) {
        os << "|s" << blk.stride;
        auto dump = [&os](const char* tag, const std::vector<int>& v) {
            os << tag;
            for (int x : v) os << x << ",";
        };
        dump(";l:", blk.layer_count_choices);
        dump(";k:", blk.kernel_choices);
        dump(";e:", blk.expansion_choices);
        dump(";f:", blk.filter_choices);
        dump(";se:", blk.se_choices);
    }
    return Rng::derive(0x4d504e4153ULL, os.str());
}

std::vector<DecisionPoint> compile(const SearchSpaceSpec& spec) {
    spec.validate();
    std::vector<DecisionPoint> out;
    for (size_t b = 0; b < spec.blocks.size(); ++b) {
        const BlockSpec& blk = spec.blocks[b];
        auto push = [&](DecisionRole role, const std::vector<int>& options) {
            DecisionPoint d;
            d.block_index = static_cast<int>(b);
            d.role = role;
            d.id = "b" + std::to_string(b) + "." + role_name(role);
            d.options = options;
            out.push_back(std::move(d));
        };
        push(DecisionRole::LayerCount, blk.layer_count_choices);
        push(DecisionRole::Kernel, blk.kernel_choices);
        push(DecisionRole::Expansion, blk.expansion_choices);
        push(DecisionRole::Filters, blk.filter_choices);
        push(DecisionRole::SqueezeExcite, blk.se_choices);
    }
    return out;
}

BigUInt path_count(const SearchSpaceSpec& spec) {
    BigUInt n(1);
    for (const auto& d : compile(spec)) {
        n *= static_cast<uint64_t>(d.arity());
    }
    return n;
}

int PathSelection::option_index(const std::string& decision_id) const {
    auto it = choices.find(decision_id);
    require<SpecError>(it != choices.end(), "path: missing decision " + decision_id);
    return it->second;
}

uint64_t PathSelection::hash() const {
    std::ostringstream os;
    for (const auto& [id, idx] : choices) os << id << "=" << idx << ";";
    return Rng::derive(space_hash, os.str());
}

void PathSelection::validate_for(const std::vector<DecisionPoint>& decisions,
                                 uint64_t expected_space_hash) const {
    require<SpecError>(space_hash == expected_space_hash,
                       "path: selection belongs to a different search space");
    require<SpecError>(choices.size() == decisions.size(),
                       "path: must cover every decision point exactly once");
    for (const auto& d : decisions) {
        const int idx = option_index(d.id);
        require<SpecError>(idx >= 0 && idx < d.arity(),
                           "path: option index " + std::to_string(idx) + " out of range for " + d.id);
    }
}

int selected_value(const DecisionPoint& d, const PathSelection& path) {
    return d.options[static_cast<size_t>(path.option_index(d.id))];
}

PathSelection uniform_random_path(const std::vector<DecisionPoint>& decisions, uint64_t space_hash,
                                  Rng& rng) {
    PathSelection path;
    path.space_hash = space_hash;
    for (const auto& d : decisions) {
        path.choices[d.id] = rng.next_int(d.arity());
    }
    return path;
}

}  // namespace mpnas
