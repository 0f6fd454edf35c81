// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference gradient oracle, independent of the backward
// implementation it checks. A coordinate whose stencil straddles a kink of a
// piecewise activation (relu / hard-swish / hard-sigmoid have no classical
// derivative there) is detected via the second difference and skipped.

#pragma once

#include <cmath>
#include <algorithm>
#include <functional>

#include "mpnas/tensor.hpp"

namespace fd {

struct Result {
    int checked = 0;
    int skipped = 0;
    int failed = 0;
    double max_rel = 0.0;
};

// rel = |analytic - fd| / max(1, |analytic|, |fd|); the unit floor keeps the
// float32 FD noise floor (~1e-4 absolute) from dominating small gradients.
inline double rel_err(double analytic, double numeric) {
    return std::fabs(analytic - numeric) /
           std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
}

// Checks d loss / d entry against central differences for one coordinate.
// `loss` must recompute the full forward pass from current state.
inline void check_entry(float* entry, double analytic, const std::function<double()>& loss,
                        Result& r, float eps = 1e-3f, double tol = 1e-3) {
    const float saved = *entry;
    *entry = saved + eps;
    const double lp = loss();
    *entry = saved - eps;
    const double lm = loss();
    *entry = saved;
    const double l0 = loss();

    const double numeric = (lp - lm) / (2.0 * static_cast<double>(eps));
    // One-sided slope disagreement: ~f''*eps for smooth functions, O(slope
    // change) when a kink sits inside the stencil. For piecewise-linear
    // activations the central-difference error is bounded by half of it, so
    // skipping the disagreeing coordinates removes exactly the points with
    // no classical derivative.
    const double s_plus = (lp - l0) / static_cast<double>(eps);
    const double s_minus = (l0 - lm) / static_cast<double>(eps);
    const double disagreement = std::fabs(s_plus - s_minus);
    if (disagreement > tol * std::max({1.0, std::fabs(s_plus), std::fabs(s_minus)})) {
        ++r.skipped;
        return;
    }
    ++r.checked;
    const double rel = rel_err(analytic, numeric);
    r.max_rel = std::max(r.max_rel, rel);
    if (rel >= tol) ++r.failed;
}

}  // namespace fd
