// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "mpnas/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "mpnas/errors.hpp"

namespace mpnas {

namespace {

constexpr char kMagic[4] = {'M', 'P', 'N', 'W'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ofstream& f, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::ifstream& f) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_f32(std::ofstream& f, const float* data, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        uint32_t bits;
        std::memcpy(&bits, &data[i], 4);
        write_u32(f, bits);
    }
}

void read_f32(std::ifstream& f, float* data, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        uint32_t bits = read_u32(f);
        std::memcpy(&data[i], &bits, 4);
    }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& file, const std::vector<ParamPtr>& params) {
    std::ofstream f(file, std::ios::binary);
    require<IoError>(f.good(), "cannot write checkpoint " + file.string());
    f.write(kMagic, 4);
    write_u32(f, kVersion);
    write_u32(f, static_cast<uint32_t>(params.size()));
    for (const auto& p : params) {
        write_u32(f, static_cast<uint32_t>(p->name.size()));
        f.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        write_u32(f, static_cast<uint32_t>(p->value.rank()));
        for (int d : p->value.shape()) write_u32(f, static_cast<uint32_t>(d));
        write_f32(f, p->value.data(), p->value.size());
    }
    require<IoError>(f.good(), "failed writing checkpoint " + file.string());
}

std::map<std::string, Tensor> load_checkpoint(const std::filesystem::path& file) {
    std::ifstream f(file, std::ios::binary);
    require<IoError>(f.good(), "cannot open checkpoint " + file.string());
    char magic[4];
    f.read(magic, 4);
    require<IoError>(std::memcmp(magic, kMagic, 4) == 0,
                     "not a checkpoint file: " + file.string());
    const uint32_t version = read_u32(f);
    require<IoError>(version == kVersion, "unsupported checkpoint version " +
                                              std::to_string(version) + " in " + file.string());
    const uint32_t count = read_u32(f);
    std::map<std::string, Tensor> out;
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = read_u32(f);
        std::string name(name_len, '\0');
        f.read(name.data(), name_len);
        const uint32_t rank = read_u32(f);
        std::vector<int> shape(rank);
        for (auto& d : shape) d = static_cast<int>(read_u32(f));
        Tensor t(shape);
        read_f32(f, t.data(), t.size());
        require<IoError>(f.good(), "truncated checkpoint " + file.string());
        out.emplace(std::move(name), std::move(t));
    }
    return out;
}

void restore_params(const std::map<std::string, Tensor>& archive,
                    const std::vector<ParamPtr>& params) {
    for (const auto& p : params) {
        auto it = archive.find(p->name);
        require<IoError>(it != archive.end(), "checkpoint missing parameter " + p->name);
        require<IoError>(it->second.shape() == p->value.shape(),
                         "checkpoint shape mismatch for " + p->name + ": stored " +
                             it->second.shape_str() + ", expected " + p->value.shape_str());
        p->value = it->second;
        p->grad.zero();
    }
}

}  // namespace mpnas
