// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "mpnas/cost_model.hpp"

#include <algorithm>
#include <cmath>

#include "mpnas/errors.hpp"

namespace mpnas {

FlopsBreakdown& FlopsBreakdown::operator+=(const FlopsBreakdown& o) {
    pointwise_conv += o.pointwise_conv;
    depthwise_conv += o.depthwise_conv;
    se += o.se;
    pool += o.pool;
    dense += o.dense;
    return *this;
}

void RewardConfig::validate() const {
    require<SpecError>(beta < 0.0, "reward: cost exponent beta must be negative");
    require<SpecError>(target_latency_ms > 0.0, "reward: target latency must be positive");
}

double LatencyCalibration::coefficient(const std::string& type) const {
    auto it = coefficients.find(type);
    return it == coefficients.end() ? 1.0 : it->second;
}

PathSelection reference_path(const SearchSpaceSpec& spec) {
    PathSelection path;
    path.space_hash = spec.hash();
    for (const auto& d : compile(spec)) {
        path.choices[d.id] = d.arity() - 1;
    }
    return path;
}

namespace {

// Origin-anchored prefix slice of a stored tensor, rows x cols elements.
struct RectUse {
    long long rows = 0;
    long long cols = 1;
};

struct FlopsTerm {
    std::string key;  // stable per candidate node / fixed layer
    RectUse rect;
    long long spatial = 1;  // MACs = rows * cols * spatial
    char type = 'p';        // p=pointwise, d=depthwise, s=se, g=pool, f=dense
    bool in_block = false;
};

struct PathUsage {
    std::vector<std::pair<std::string, RectUse>> param_uses;
    std::vector<FlopsTerm> terms;
};

int ceil_div(int a, int b) { return (a + b - 1) / b; }

// One shared walk over the resolved structure produces both the weight-slice
// usages and the MAC terms, so params and FLOPS cannot drift apart. The kit
// prefix keeps per-domain stem/head tensors distinct across domains; only
// candidate (block) tensors are shared.
PathUsage walk_path(const SearchSpaceSpec& spec, const std::vector<DecisionPoint>& decisions,
                    const PathSelection& path, int resolution, int head_classes,
                    const std::string& kit_prefix) {
    require<SpecError>(resolution > 0, "cost: resolution must be positive");
    PathStructure ps = resolve_structure(spec, decisions, path);
    const bool bias = spec.use_bias;
    PathUsage u;

    auto use = [&u, bias](const std::string& name, long long rows, long long cols, bool is_bias) {
        if (is_bias && !bias) return;
        u.param_uses.push_back({name, RectUse{rows, cols}});
    };
    auto term = [&u](std::string key, long long rows, long long cols, long long spatial, char type,
                     bool in_block) {
        u.terms.push_back(FlopsTerm{std::move(key), RectUse{rows, cols}, spatial, type, in_block});
    };

    int h = resolution, w = resolution;
    use(kit_prefix + ".stem.pw.w", spec.stem.filters, spec.input_channels, false);
    use(kit_prefix + ".stem.pw.b", spec.stem.filters, 1, true);
    term(kit_prefix + ".stem.pw", spec.stem.filters, spec.input_channels,
         static_cast<long long>(h) * w, 'p', false);
    h = ceil_div(h, spec.stem.stride);
    w = ceil_div(w, spec.stem.stride);
    use(kit_prefix + ".stem.dw.w", static_cast<long long>(spec.stem.filters) * 9, 1, false);
    use(kit_prefix + ".stem.dw.b", spec.stem.filters, 1, true);
    term(kit_prefix + ".stem.dw", static_cast<long long>(spec.stem.filters) * 9, 1,
         static_cast<long long>(h) * w, 'd', false);

    for (const auto& ls : ps.layers) {
        const int b = ls.block, l = ls.layer, e = ls.expansion;
        const long long hw_in = static_cast<long long>(h) * w;
        const int oh = ceil_div(h, ls.stride), ow = ceil_div(w, ls.stride);
        const long long hw_out = static_cast<long long>(oh) * ow;

        if (e > 1) {
            use(pname::expand_w(b, l, e), ls.hidden, ls.in_c, false);
            use(pname::expand_b(b, l, e), ls.hidden, 1, true);
            term(pname::expand_w(b, l, e), ls.hidden, ls.in_c, hw_in, 'p', true);
        }
        use(pname::dw_w(b, l, ls.kernel), static_cast<long long>(ls.hidden) * ls.kernel * ls.kernel,
            1, false);
        use(pname::dw_b(b, l, ls.kernel), ls.hidden, 1, true);
        term(pname::dw_w(b, l, ls.kernel), static_cast<long long>(ls.hidden) * ls.kernel * ls.kernel,
             1, hw_out, 'd', true);
        if (ls.se) {
            use(pname::se_fc1_w(b, l), ls.se_mid, ls.hidden, false);
            use(pname::se_fc1_b(b, l), ls.se_mid, 1, true);
            use(pname::se_fc2_w(b, l), ls.hidden, ls.se_mid, false);
            use(pname::se_fc2_b(b, l), ls.hidden, 1, true);
            term(pname::se_fc1_w(b, l) + ".pool", ls.hidden, 1, hw_out, 's', true);
            term(pname::se_fc1_w(b, l), ls.se_mid, ls.hidden, 1, 's', true);
            term(pname::se_fc2_w(b, l), ls.hidden, ls.se_mid, 1, 's', true);
            term(pname::se_fc2_w(b, l) + ".gate", ls.hidden, 1, hw_out, 's', true);
        }
        use(pname::project_w(b, l, e), ls.out_c, ls.hidden, false);
        use(pname::project_b(b, l, e), ls.out_c, 1, true);
        term(pname::project_w(b, l, e), ls.out_c, ls.hidden, hw_out, 'p', true);

        h = oh;
        w = ow;
    }

    term(kit_prefix + ".head.gap", ps.feature_channels, 1, static_cast<long long>(h) * w, 'g',
         false);
    use(kit_prefix + ".head.hidden.w", ps.head_hidden, ps.feature_channels, false);
    use(kit_prefix + ".head.hidden.b", ps.head_hidden, 1, true);
    term(kit_prefix + ".head.hidden", ps.head_hidden, ps.feature_channels, 1, 'f', false);
    if (head_classes > 0) {
        use(kit_prefix + ".head.w", head_classes, ps.head_hidden, false);
        use(kit_prefix + ".head.b", head_classes, 1, true);
        term(kit_prefix + ".head", head_classes, ps.head_hidden, 1, 'f', false);
    }
    return u;
}

void add_term_flops(FlopsBreakdown& bd, char type, long long macs) {
    const long long f = 2 * macs;
    switch (type) {
        case 'p': bd.pointwise_conv += f; break;
        case 'd': bd.depthwise_conv += f; break;
        case 's': bd.se += f; break;
        case 'g': bd.pool += f; break;
        case 'f': bd.dense += f; break;
    }
}

// Union element count of origin-anchored rectangles (prefix slices are
// always anchored at the origin of their tensor).
long long union_area(std::vector<RectUse> rects) {
    std::sort(rects.begin(), rects.end(),
              [](const RectUse& a, const RectUse& b) { return a.cols > b.cols; });
    long long area = 0, max_rows = 0;
    for (size_t i = 0; i < rects.size(); ++i) {
        max_rows = std::max(max_rows, rects[i].rows);
        const long long next_cols = (i + 1 < rects.size()) ? rects[i + 1].cols : 0;
        area += (rects[i].cols - next_cols) * max_rows;
    }
    return area;
}

}  // namespace

long long params(const SearchSpaceSpec& spec, const PathSelection& path, int head_classes) {
    auto u = walk_path(spec, compile(spec), path, /*resolution=*/1, head_classes, "d0");
    long long total = 0;
    for (const auto& [name, r] : u.param_uses) {
        (void)name;
        total += r.rows * r.cols;
    }
    return total;
}

long long candidate_params(const SearchSpaceSpec& spec, const PathSelection& path) {
    auto u = walk_path(spec, compile(spec), path, /*resolution=*/1, 0, "d0");
    long long total = 0;
    for (const auto& [name, r] : u.param_uses) {
        if (name.starts_with("d0.")) continue;  // per-domain kit tensors
        total += r.rows * r.cols;
    }
    return total;
}

FlopsBreakdown flops(const SearchSpaceSpec& spec, const PathSelection& path, int resolution,
                     int head_classes) {
    auto u = walk_path(spec, compile(spec), path, resolution, head_classes, "d0");
    FlopsBreakdown bd;
    for (const auto& t : u.terms) {
        add_term_flops(bd, t.type, t.rect.rows * t.rect.cols * t.spatial);
    }
    return bd;
}

FlopsBreakdown block_flops(const SearchSpaceSpec& spec, const PathSelection& path, int resolution) {
    auto u = walk_path(spec, compile(spec), path, resolution, 0, "d0");
    FlopsBreakdown bd;
    for (const auto& t : u.terms) {
        if (t.in_block) add_term_flops(bd, t.type, t.rect.rows * t.rect.cols * t.spatial);
    }
    return bd;
}

double reward(double quality, double latency_ms, const RewardConfig& cfg) {
    cfg.validate();
    require<SpecError>(std::isfinite(quality) && quality >= 0.0 && quality <= 1.0,
                       "reward: quality must lie in [0,1]");
    require<SpecError>(std::isfinite(latency_ms) && latency_ms > 0.0,
                       "reward: latency must be positive");
    return quality * std::pow(latency_ms / cfg.target_latency_ms, cfg.beta);
}

LatencyCalibration LatencyCalibration::identity(const SearchSpaceSpec& spec, int resolution,
                                                double target_ms) {
    LatencyCalibration cal;
    cal.base_ms = 0.0;
    cal.target_ms = target_ms;
    cal.flops_ref = static_cast<double>(block_flops(spec, reference_path(spec), resolution).total());
    return cal;
}

double latency_from_breakdown(const FlopsBreakdown& blocks, const LatencyCalibration& cal) {
    require<SpecError>(cal.flops_ref > 0.0, "latency: calibration flops_ref must be positive");
    double weighted = cal.coefficient("pointwise_conv") * static_cast<double>(blocks.pointwise_conv) +
                      cal.coefficient("depthwise_conv") * static_cast<double>(blocks.depthwise_conv) +
                      cal.coefficient("se") * static_cast<double>(blocks.se) +
                      cal.coefficient("pool") * static_cast<double>(blocks.pool) +
                      cal.coefficient("dense") * static_cast<double>(blocks.dense);
    return cal.base_ms + weighted / cal.flops_ref * cal.target_ms;
}

double latency_estimate(const SearchSpaceSpec& spec, const PathSelection& path,
                        const LatencyCalibration& cal, int resolution) {
    return latency_from_breakdown(block_flops(spec, path, resolution), cal);
}

long long joint_params(const SearchSpaceSpec& spec, const std::vector<PathSelection>& paths,
                       const std::vector<int>& head_classes) {
    require<SpecError>(!paths.empty(), "joint_params: path list must be non-empty");
    require<SpecError>(head_classes.empty() || head_classes.size() == paths.size(),
                       "joint_params: one head class count per domain required");
    auto decisions = compile(spec);
    std::map<std::string, std::vector<RectUse>> by_tensor;
    for (size_t d = 0; d < paths.size(); ++d) {
        const int hc = head_classes.empty() ? 0 : head_classes[d];
        auto u = walk_path(spec, decisions, paths[d], 1, hc, "d" + std::to_string(d));
        for (auto& [name, r] : u.param_uses) by_tensor[name].push_back(r);
    }
    long long total = 0;
    for (auto& [name, rects] : by_tensor) {
        (void)name;
        total += union_area(std::move(rects));
    }
    return total;
}

FlopsBreakdown joint_flops(const SearchSpaceSpec& spec, const std::vector<PathSelection>& paths,
                           int resolution, const std::vector<int>& head_classes) {
    require<SpecError>(!paths.empty(), "joint_flops: path list must be non-empty");
    require<SpecError>(head_classes.empty() || head_classes.size() == paths.size(),
                       "joint_flops: one head class count per domain required");
    auto decisions = compile(spec);
    struct TermGroup {
        std::vector<RectUse> rects;
        long long spatial = 1;
        char type = 'p';
    };
    std::map<std::string, TermGroup> by_key;
    for (size_t d = 0; d < paths.size(); ++d) {
        const int hc = head_classes.empty() ? 0 : head_classes[d];
        auto u = walk_path(spec, decisions, paths[d], resolution, hc, "d" + std::to_string(d));
        for (auto& t : u.terms) {
            auto& g = by_key[t.key];
            g.rects.push_back(t.rect);
            g.spatial = t.spatial;  // path independent for a given key
            g.type = t.type;
        }
    }
    FlopsBreakdown bd;
    for (auto& [key, g] : by_key) {
        (void)key;
        add_term_flops(bd, g.type, union_area(std::move(g.rects)) * g.spatial);
    }
    return bd;
}

}  // namespace mpnas
