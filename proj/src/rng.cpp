// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "mpnas/rng.hpp"

#include <cmath>

#include "mpnas/errors.hpp"

namespace mpnas {

int Rng::next_int(int n) {
    require(n > 0, "Rng::next_int: n must be positive");
    // Rejection sampling to avoid modulo bias.
    uint64_t limit = ~0ULL - (~0ULL % static_cast<uint64_t>(n));
    uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return static_cast<int>(x % static_cast<uint64_t>(n));
}

float Rng::next_gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1, u2;
    do {
        u1 = next_double();
    } while (u1 <= 1e-300);
    u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 2.0 * 3.14159265358979323846 * u2;
    spare_ = static_cast<float>(r * std::sin(t));
    have_spare_ = true;
    return static_cast<float>(r * std::cos(t));
}

namespace {
uint64_t fnv1a(std::string_view s, uint64_t h) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}
uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace

uint64_t Rng::derive(uint64_t parent, std::string_view label) {
    uint64_t h = fnv1a(label, 0xcbf29ce484222325ULL ^ parent);
    return mix(h + 0x9e3779b97f4a7c15ULL);
}

uint64_t Rng::derive(uint64_t parent, std::string_view label, uint64_t index) {
    return mix(derive(parent, label) + 0x9e3779b97f4a7c15ULL * (index + 1));
}

}  // namespace mpnas
