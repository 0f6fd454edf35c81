// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include "mpnas/layers.hpp"

namespace mpnas {

// Named-parameter archive: magic "MPNW", version, then per entry name,
// shape, and raw little-endian float32 data.
void save_checkpoint(const std::filesystem::path& file, const std::vector<ParamPtr>& params);

std::map<std::string, Tensor> load_checkpoint(const std::filesystem::path& file);

// Copies loaded tensors into matching parameters by name; every parameter
// must be present with an identical shape.
void restore_params(const std::map<std::string, Tensor>& archive,
                    const std::vector<ParamPtr>& params);

}  // namespace mpnas
