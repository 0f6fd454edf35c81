// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "mpnas/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mpnas/errors.hpp"

namespace mpnas {

std::set<std::string> path_node_set(const std::vector<DecisionPoint>& decisions,
                                    const PathSelection& path) {
    std::set<std::string> out;
    for (const auto& d : decisions) {
        out.insert(d.id + "." + std::to_string(path.option_index(d.id)));
    }
    return out;
}

double jaccard(const std::vector<DecisionPoint>& decisions, const PathSelection& a,
               const PathSelection& b) {
    require<SpecError>(a.space_hash == b.space_hash,
                       "jaccard: paths come from different search spaces");
    const auto sa = path_node_set(decisions, a);
    const auto sb = path_node_set(decisions, b);
    if (sa.empty() && sb.empty()) return 1.0;
    size_t inter = 0;
    for (const auto& id : sa) inter += sb.count(id);
    const size_t uni = sa.size() + sb.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

void SimilarityMatrix::validate() const {
    const size_t n = labels.size();
    require(values.size() == n, "similarity matrix: row count mismatch");
    for (size_t i = 0; i < n; ++i) {
        require(values[i].size() == n, "similarity matrix: column count mismatch");
        require(values[i][i] == 1.0, "similarity matrix: diagonal must be 1");
        for (size_t j = 0; j < n; ++j) {
            require(values[i][j] >= 0.0 && values[i][j] <= 1.0,
                    "similarity matrix: entries must lie in [0,1]");
            require(values[i][j] == values[j][i], "similarity matrix: must be symmetric");
        }
    }
}

SimilarityMatrix similarity_matrix(const std::vector<DecisionPoint>& decisions,
                                   const std::vector<PathSelection>& paths,
                                   const std::vector<std::string>& labels) {
    require<SpecError>(paths.size() == labels.size(), "similarity: one label per path required");
    SimilarityMatrix m;
    m.labels = labels;
    const size_t n = paths.size();
    m.values.assign(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i) {
        m.values[i][i] = 1.0;
        for (size_t j = i + 1; j < n; ++j) {
            const double v = jaccard(decisions, paths[i], paths[j]);
            m.values[i][j] = v;
            m.values[j][i] = v;
        }
    }
    m.validate();
    return m;
}

void write_matrix_csv(const SimilarityMatrix& m, const std::filesystem::path& file) {
    m.validate();
    std::ofstream f(file);
    require<IoError>(f.good(), "cannot write " + file.string());
    f << "domain";
    for (const auto& l : m.labels) f << "," << l;
    f << "\n";
    char buf[64];
    for (size_t i = 0; i < m.labels.size(); ++i) {
        f << m.labels[i];
        for (size_t j = 0; j < m.labels.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m.values[i][j]);
            f << "," << buf;
        }
        f << "\n";
    }
}

SimilarityMatrix read_matrix_csv(const std::filesystem::path& file) {
    std::ifstream f(file);
    require<IoError>(f.good(), "cannot open " + file.string());
    SimilarityMatrix m;
    std::string line;
    require<IoError>(static_cast<bool>(std::getline(f, line)), "empty matrix file " + file.string());
    std::stringstream header(line);
    std::string cell;
    bool first = true;
    while (std::getline(header, cell, ',')) {
        if (first) {
            first = false;
            continue;
        }
        m.labels.push_back(cell);
    }
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::vector<double> values;
        bool lead = true;
        while (std::getline(row, cell, ',')) {
            if (lead) {
                lead = false;
                continue;
            }
            values.push_back(std::strtod(cell.c_str(), nullptr));
        }
        m.values.push_back(std::move(values));
    }
    m.validate();
    return m;
}

SharingStats sharing_stats(const JointModel& joint) {
    SharingStats stats;
    stats.nodes = joint.nodes();
    for (const auto& node : stats.nodes) {
        if (node.domains.size() >= 2) {
            ++stats.shared_nodes;
        } else {
            ++stats.exclusive_nodes;
        }
    }
    return stats;
}

CostReductionReport cost_reduction_report(const SearchSpaceSpec& spec,
                                          const std::vector<PathSelection>& paths, int resolution,
                                          const std::vector<std::string>& labels) {
    require<SpecError>(!paths.empty(), "cost reduction: no paths");
    require<SpecError>(labels.size() == paths.size(), "cost reduction: one label per path");
    CostReductionReport report;
    for (size_t i = 0; i < paths.size(); ++i) {
        CostReport row;
        row.path_id = labels[i];
        row.params = params(spec, paths[i]);
        row.flops = flops(spec, paths[i], resolution).total();
        report.bundle_params += row.params;
        report.bundle_flops += row.flops;
        report.per_domain.push_back(std::move(row));
    }
    require<SpecError>(report.bundle_params > 0 && report.bundle_flops > 0,
                       "cost reduction: zero-cost bundle");
    report.joint_params = joint_params(spec, paths);
    report.joint_flops = joint_flops(spec, paths, resolution).total();
    report.param_reduction =
        1.0 - static_cast<double>(report.joint_params) / static_cast<double>(report.bundle_params);
    report.flops_reduction =
        1.0 - static_cast<double>(report.joint_flops) / static_cast<double>(report.bundle_flops);
    return report;
}

}  // namespace mpnas
