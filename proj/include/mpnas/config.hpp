// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpnas/dataset.hpp"
#include "mpnas/search_engine.hpp"

namespace mpnas {

// Resolved view of one run: search space, search settings, data source, and
// output directory. Precedence when building the JSON: config file, then
// MPNAS_* environment variables, then command-line flags; the resolved
// result is persisted into the run directory.
struct RunConfig {
    SearchSpaceSpec space;
    DomainFamilySpec family;
    std::vector<std::string> dataset_dirs;  // when set, datasets load from disk
    SearchConfig search;
    std::string out_dir = "runs/out";

    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    std::vector<DomainDataset> load_datasets() const;
};

nlohmann::json read_json_file(const std::filesystem::path& file);
void write_json_file(const std::filesystem::path& file, const nlohmann::json& j);

// Applies MPNAS_OUT_DIR / MPNAS_SEED, then the given flag overrides, on top
// of the raw config JSON.
void apply_env_overrides(nlohmann::json& j);

nlohmann::json space_to_json(const SearchSpaceSpec& spec);
SearchSpaceSpec space_from_json(const nlohmann::json& j);

nlohmann::json family_to_json(const DomainFamilySpec& spec);
DomainFamilySpec family_from_json(const nlohmann::json& j);

nlohmann::json search_to_json(const SearchConfig& cfg);
SearchConfig search_from_json(const nlohmann::json& j);

nlohmann::json path_to_json(const PathSelection& path);
PathSelection path_from_json(const nlohmann::json& j);

}  // namespace mpnas
