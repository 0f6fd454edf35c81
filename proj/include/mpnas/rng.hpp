// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace mpnas {

// SplitMix64 generator. Hand-rolled (instead of <random> engines/distributions)
// so that streams are bit-identical across standard libraries and so that a
// stream can be derived per component from a single root seed.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    float next_float() { return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f; }

    float uniform(float lo, float hi) { return lo + (hi - lo) * next_float(); }

    // Uniform integer in [0, n).
    int next_int(int n);

    // Standard normal via Box-Muller.
    float next_gaussian();

    // In-place Fisher-Yates shuffle of indices.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            int j = next_int(i + 1);
            std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
        }
    }

    // Derives a child seed from a parent seed and a stream label. Used to
    // split the single root seed hierarchically (data, weights, controllers).
    static uint64_t derive(uint64_t parent, std::string_view label);
    static uint64_t derive(uint64_t parent, std::string_view label, uint64_t index);

private:
    uint64_t state_;
    bool have_spare_ = false;
    float spare_ = 0.f;
};

}  // namespace mpnas
