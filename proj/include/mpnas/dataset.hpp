// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mpnas/rng.hpp"
#include "mpnas/tensor.hpp"

namespace mpnas {

enum class Split { Train, Validation, Test };
const char* split_name(Split s);

struct Example {
    Tensor image;  // [H, W, C], values in [0,1]
    int label = 0;
};

struct DomainDataset {
    std::string name;
    int class_count = 0;
    int resolution = 0;
    int channels = 1;
    std::vector<Example> train, validation, test;

    const std::vector<Example>& split(Split s) const;
    std::vector<Example>& split(Split s);
};

struct PairCorrelation {
    int a = 0, b = 1;
    double coeff = 0.0;
};

// Synthetic multi-domain family. Each domain draws examples from
// class-conditional latent patterns; a pair with correlation c shares a
// |c|-fraction of its patterns (negative c shares them under shifted labels,
// an anti-correlated label mapping).
struct DomainFamilySpec {
    int domain_count = 4;
    std::vector<int> class_counts{4, 10, 4, 6};
    std::vector<PairCorrelation> correlations{{0, 1, 0.9}, {0, 3, 0.5}};
    int resolution = 16;
    int channels = 1;
    double noise = 0.05;
    std::vector<double> noise_per_domain;  // optional per-domain override
    int train_per_class = 64;
    int val_per_class = 16;
    int test_per_class = 16;
    uint64_t seed = 0;

    void validate() const;
    double domain_noise(int d) const;
};

// Fully deterministic per spec (bitwise).
std::vector<DomainDataset> generate(const DomainFamilySpec& spec);

// The latent pattern a domain uses for one class; exposed so correlation
// structure is testable.
Tensor class_pattern(const DomainFamilySpec& spec, int domain, int cls);

// Layout: <dir>/manifest.json plus <split>/<label>/<index>.f32 raw
// little-endian float32 tensors.
void write_dataset(const DomainDataset& ds, const std::filesystem::path& dir);
DomainDataset load_directory(const std::filesystem::path& dir, uint64_t shuffle_seed = 0);

struct Batch {
    Tensor inputs;  // [N, H, W, C]
    std::vector<int> labels;
    Split split = Split::Train;
};

// Epoch-wise shuffling iterator; the last partial batch of an epoch is
// dropped. Deterministic per seed.
class BatchIterator {
public:
    BatchIterator(const DomainDataset& ds, Split split, int batch_size, uint64_t seed);

    Batch next();
    int batches_per_epoch() const { return static_cast<int>(order_.size()) / batch_size_; }
    int epoch() const { return epoch_; }

private:
    void reshuffle();

    const DomainDataset* ds_;
    Split split_;
    int batch_size_;
    Rng rng_;
    std::vector<int> order_;
    size_t cursor_ = 0;
    int epoch_ = 0;
};

}  // namespace mpnas
