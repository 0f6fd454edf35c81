// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <filesystem>

#include "doctest.h"
#include "mpnas/checkpoint.hpp"
#include "mpnas/config.hpp"
#include "mpnas/errors.hpp"
#include "mpnas/supernet.hpp"

using namespace mpnas;
namespace fs = std::filesystem;
using json = nlohmann::json;

TEST_CASE("checkpoint round-trip restores bitwise-identical forward outputs") {
    SearchSpaceSpec spec = SearchSpaceSpec::desk_default();
    SuperNetwork net(spec, 31);
    DomainKit kit = net.make_kit(5, "d0", 17);
    Rng rng(3);
    PathSelection path = net.random_path(rng);

    Tensor batch({2, 16, 16, 1});
    for (size_t i = 0; i < batch.size(); ++i) batch[i] = rng.next_float();
    ComputeGraph g = net.instantiate(path, kit);
    Tensor before = g.forward(batch);

    std::vector<ParamPtr> to_save = net.all_params();
    for (const auto& p : kit.params()) to_save.push_back(p);
    const fs::path file = fs::temp_directory_path() / "mpnas_test_ckpt.bin";
    save_checkpoint(file, to_save);

    // Different seeds -> different weights, then restore.
    SuperNetwork net2(spec, 99);
    DomainKit kit2 = net2.make_kit(5, "d0", 77);
    std::vector<ParamPtr> to_load = net2.all_params();
    for (const auto& p : kit2.params()) to_load.push_back(p);
    restore_params(load_checkpoint(file), to_load);

    ComputeGraph g2 = net2.instantiate(path, kit2);
    Tensor after = g2.forward(batch);
    REQUIRE(after.size() == before.size());
    for (size_t i = 0; i < before.size(); ++i) CHECK(after[i] == before[i]);
}

TEST_CASE("checkpoint errors: missing parameter and shape mismatch") {
    auto a = std::make_shared<Parameter>("a", std::vector<int>{2, 2});
    const fs::path file = fs::temp_directory_path() / "mpnas_test_ckpt2.bin";
    save_checkpoint(file, {a});

    auto b = std::make_shared<Parameter>("b", std::vector<int>{2, 2});
    CHECK_THROWS_AS(restore_params(load_checkpoint(file), {b}), IoError);
    auto a3 = std::make_shared<Parameter>("a", std::vector<int>{3, 2});
    CHECK_THROWS_AS(restore_params(load_checkpoint(file), {a3}), IoError);
    CHECK_THROWS_AS(load_checkpoint(fs::temp_directory_path() / "does_not_exist.bin"), IoError);
}

TEST_CASE("run config round-trips through JSON") {
    json j;
    j["seed"] = 17;
    j["search"]["mode"] = "mrp";
    j["search"]["mrp_trials"] = 3;
    j["search"]["balance"]["kind"] = "quadratic";
    j["family"]["domain_count"] = 2;
    j["family"]["class_counts"] = {3, 5};
    j["family"]["correlations"] = json::array();

    RunConfig rc = RunConfig::from_json(j);
    CHECK(rc.search.seed == 17);
    CHECK(rc.search.mode == SearchMode::MRP);
    CHECK(rc.search.mrp_trials == 3);
    CHECK(rc.search.balance.kind == BoostKind::Quadratic);
    CHECK(rc.family.domain_count == 2);
    // resolution follows the family
    CHECK(rc.search.resolution == rc.family.resolution);

    RunConfig back = RunConfig::from_json(rc.to_json());
    CHECK(back.to_json() == rc.to_json());
}

TEST_CASE("environment overrides sit between file and flags") {
    json j;
    j["seed"] = 1;
    j["out_dir"] = "from_file";
    setenv("MPNAS_SEED", "2", 1);
    setenv("MPNAS_OUT_DIR", "from_env", 1);
    apply_env_overrides(j);
    unsetenv("MPNAS_SEED");
    unsetenv("MPNAS_OUT_DIR");
    CHECK(j["seed"] == 2);
    CHECK(j["out_dir"] == "from_env");
    // a later flag write wins
    j["seed"] = 3;
    CHECK(RunConfig::from_json(j).search.seed == 3);
}

TEST_CASE("malformed MPNAS_SEED is rejected with a clear error") {
    json j;
    setenv("MPNAS_SEED", "not_a_number", 1);
    CHECK_THROWS_AS(apply_env_overrides(j), SpecError);
    unsetenv("MPNAS_SEED");
}

TEST_CASE("path selections round-trip through JSON") {
    SearchSpaceSpec spec = SearchSpaceSpec::desk_default();
    auto decisions = compile(spec);
    Rng rng(4);
    PathSelection p = uniform_random_path(decisions, spec.hash(), rng);
    PathSelection q = path_from_json(path_to_json(p));
    CHECK(q.space_hash == p.space_hash);
    CHECK(q.choices == p.choices);
    CHECK(q.hash() == p.hash());
}

TEST_CASE("space JSON round-trip preserves the hash") {
    SearchSpaceSpec spec = SearchSpaceSpec::desk_default();
    SearchSpaceSpec back = space_from_json(space_to_json(spec));
    CHECK(back.hash() == spec.hash());
}
