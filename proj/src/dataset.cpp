// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "mpnas/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "mpnas/errors.hpp"

namespace mpnas {

using json = nlohmann::json;

const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Validation: return "validation";
        case Split::Test: return "test";
    }
    return "?";
}

const std::vector<Example>& DomainDataset::split(Split s) const {
    switch (s) {
        case Split::Train: return train;
        case Split::Validation: return validation;
        case Split::Test:
        default: return test;
    }
}

std::vector<Example>& DomainDataset::split(Split s) {
    switch (s) {
        case Split::Train: return train;
        case Split::Validation: return validation;
        case Split::Test:
        default: return test;
    }
}

void DomainFamilySpec::validate() const {
    require<SpecError>(domain_count >= 1, "family: domain_count must be >= 1");
    require<SpecError>(static_cast<int>(class_counts.size()) == domain_count,
                       "family: class_counts must list one entry per domain");
    for (int c : class_counts) {
        require<SpecError>(c >= 2, "family: every domain needs at least 2 classes");
    }
    require<SpecError>(resolution > 0, "family: resolution must be positive");
    require<SpecError>(channels >= 1 && channels <= 3, "family: channels must be 1..3");
    require<SpecError>(noise >= 0.0, "family: noise must be non-negative");
    require<SpecError>(noise_per_domain.empty() ||
                           static_cast<int>(noise_per_domain.size()) == domain_count,
                       "family: noise_per_domain must list one entry per domain");
    for (double n : noise_per_domain) {
        require<SpecError>(n >= 0.0, "family: noise_per_domain entries must be non-negative");
    }
    require<SpecError>(train_per_class >= 1 && val_per_class >= 1 && test_per_class >= 1,
                       "family: per-class split sizes must be >= 1");
    for (const auto& pc : correlations) {
        require<SpecError>(pc.a >= 0 && pc.a < domain_count && pc.b >= 0 && pc.b < domain_count &&
                               pc.a != pc.b,
                           "family: correlations.domains must name two distinct domains");
        require<SpecError>(pc.coeff >= -1.0 && pc.coeff <= 1.0,
                           "family: correlations.coeff must lie in [-1,1], got " +
                               std::to_string(pc.coeff));
    }
}

double DomainFamilySpec::domain_noise(int d) const {
    return noise_per_domain.empty() ? noise : noise_per_domain[static_cast<size_t>(d)];
}

namespace {

struct PatternKey {
    int owner = 0;  // domain whose pattern stream generates the content
    int cls = 0;
};

// Resolves which latent pattern each (domain, class) uses. A correlated pair
// (a<b, coeff rho) makes b adopt a's patterns for the first
// round(|rho| * min(Ca, Cb)) classes; negative rho adopts them under a label
// shift of one. Pairs are applied in (a, b) order; first adoption wins.
std::vector<std::vector<PatternKey>> resolve_patterns(const DomainFamilySpec& spec) {
    std::vector<std::vector<PatternKey>> keys(static_cast<size_t>(spec.domain_count));
    for (int d = 0; d < spec.domain_count; ++d) {
        for (int c = 0; c < spec.class_counts[static_cast<size_t>(d)]; ++c) {
            keys[static_cast<size_t>(d)].push_back(PatternKey{d, c});
        }
    }
    auto pairs = spec.correlations;
    for (auto& p : pairs) {
        if (p.a > p.b) std::swap(p.a, p.b);
    }
    std::sort(pairs.begin(), pairs.end(), [](const PairCorrelation& x, const PairCorrelation& y) {
        return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });
    std::vector<std::vector<bool>> adopted(static_cast<size_t>(spec.domain_count));
    for (int d = 0; d < spec.domain_count; ++d) {
        adopted[static_cast<size_t>(d)].assign(
            static_cast<size_t>(spec.class_counts[static_cast<size_t>(d)]), false);
    }
    for (const auto& p : pairs) {
        const int ca = spec.class_counts[static_cast<size_t>(p.a)];
        const int cb = spec.class_counts[static_cast<size_t>(p.b)];
        const int shared = static_cast<int>(std::llround(std::fabs(p.coeff) * std::min(ca, cb)));
        for (int c = 0; c < shared; ++c) {
            if (adopted[static_cast<size_t>(p.b)][static_cast<size_t>(c)]) continue;
            const int src_cls = p.coeff >= 0.0 ? c : (c + 1) % shared;
            keys[static_cast<size_t>(p.b)][static_cast<size_t>(c)] =
                keys[static_cast<size_t>(p.a)][static_cast<size_t>(src_cls)];
            adopted[static_cast<size_t>(p.b)][static_cast<size_t>(c)] = true;
        }
    }
    return keys;
}

Tensor make_pattern(const DomainFamilySpec& spec, const PatternKey& key) {
    Rng rng(Rng::derive(spec.seed, "pattern." + std::to_string(key.owner),
                        static_cast<uint64_t>(key.cls)));
    Tensor p({spec.resolution, spec.resolution, spec.channels});
    for (size_t i = 0; i < p.size(); ++i) p[i] = rng.uniform(-1.f, 1.f);
    return p;
}

Example make_example(const DomainFamilySpec& spec, const Tensor& pattern, int domain, int cls,
                     Split split, int index) {
    const std::string stream = "noise.d" + std::to_string(domain) + "." + split_name(split) + ".c" +
                               std::to_string(cls);
    Rng rng(Rng::derive(spec.seed, stream, static_cast<uint64_t>(index)));
    const float sigma = static_cast<float>(spec.domain_noise(domain));
    Example ex;
    ex.label = cls;
    ex.image = Tensor(pattern.shape());
    for (size_t i = 0; i < pattern.size(); ++i) {
        const float v = 0.5f + 0.3f * pattern[i] + sigma * rng.next_gaussian();
        ex.image[i] = std::clamp(v, 0.f, 1.f);
    }
    return ex;
}

}  // namespace

Tensor class_pattern(const DomainFamilySpec& spec, int domain, int cls) {
    spec.validate();
    require<SpecError>(domain >= 0 && domain < spec.domain_count, "family: domain out of range");
    require<SpecError>(cls >= 0 && cls < spec.class_counts[static_cast<size_t>(domain)],
                       "family: class out of range");
    auto keys = resolve_patterns(spec);
    return make_pattern(spec, keys[static_cast<size_t>(domain)][static_cast<size_t>(cls)]);
}

std::vector<DomainDataset> generate(const DomainFamilySpec& spec) {
    spec.validate();
    auto keys = resolve_patterns(spec);
    std::vector<DomainDataset> out;
    for (int d = 0; d < spec.domain_count; ++d) {
        DomainDataset ds;
        ds.name = "d" + std::to_string(d);
        ds.class_count = spec.class_counts[static_cast<size_t>(d)];
        ds.resolution = spec.resolution;
        ds.channels = spec.channels;
        for (int c = 0; c < ds.class_count; ++c) {
            const Tensor pattern = make_pattern(spec, keys[static_cast<size_t>(d)][static_cast<size_t>(c)]);
            for (int i = 0; i < spec.train_per_class; ++i) {
                ds.train.push_back(make_example(spec, pattern, d, c, Split::Train, i));
            }
            for (int i = 0; i < spec.val_per_class; ++i) {
                ds.validation.push_back(make_example(spec, pattern, d, c, Split::Validation, i));
            }
            for (int i = 0; i < spec.test_per_class; ++i) {
                ds.test.push_back(make_example(spec, pattern, d, c, Split::Test, i));
            }
        }
        out.push_back(std::move(ds));
    }
    return out;
}

void write_dataset(const DomainDataset& ds, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    json manifest;
    manifest["name"] = ds.name;
    manifest["resolution"] = ds.resolution;
    manifest["channels"] = ds.channels;
    manifest["class_count"] = ds.class_count;
    manifest["splits"] = {{"train", ds.train.size()},
                          {"validation", ds.validation.size()},
                          {"test", ds.test.size()}};
    std::ofstream mf(dir / "manifest.json");
    require<IoError>(mf.good(), "cannot write " + (dir / "manifest.json").string());
    mf << manifest.dump(2) << "\n";

    for (Split s : {Split::Train, Split::Validation, Split::Test}) {
        std::map<int, int> next_index;
        for (const auto& ex : ds.split(s)) {
            const fs::path label_dir = dir / split_name(s) / std::to_string(ex.label);
            fs::create_directories(label_dir);
            char fname[32];
            std::snprintf(fname, sizeof(fname), "%06d.f32", next_index[ex.label]++);
            std::ofstream f(label_dir / fname, std::ios::binary);
            require<IoError>(f.good(), "cannot write " + (label_dir / fname).string());
            f.write(reinterpret_cast<const char*>(ex.image.data()),
                    static_cast<std::streamsize>(ex.image.size() * sizeof(float)));
        }
    }
}

DomainDataset load_directory(const std::filesystem::path& dir, uint64_t shuffle_seed) {
    namespace fs = std::filesystem;
    const fs::path manifest_path = dir / "manifest.json";
    require<IoError>(fs::exists(manifest_path), "missing manifest: " + manifest_path.string());
    std::ifstream mf(manifest_path);
    json manifest;
    try {
        mf >> manifest;
    } catch (const std::exception& e) {
        throw IoError("invalid manifest " + manifest_path.string() + ": " + e.what());
    }

    DomainDataset ds;
    ds.name = manifest.value("name", dir.filename().string());
    ds.resolution = manifest.at("resolution").get<int>();
    ds.channels = manifest.at("channels").get<int>();
    ds.class_count = manifest.at("class_count").get<int>();
    require<IoError>(ds.resolution > 0 && ds.channels > 0 && ds.class_count > 0,
                     "manifest with non-positive dimensions: " + manifest_path.string());
    const size_t expected = static_cast<size_t>(ds.resolution) * ds.resolution * ds.channels;

    for (Split s : {Split::Train, Split::Validation, Split::Test}) {
        const fs::path split_dir = dir / split_name(s);
        if (!fs::exists(split_dir)) continue;  // empty split
        std::vector<fs::path> label_dirs;
        for (const auto& entry : fs::directory_iterator(split_dir)) {
            if (entry.is_directory()) label_dirs.push_back(entry.path());
        }
        std::sort(label_dirs.begin(), label_dirs.end());
        for (const auto& label_dir : label_dirs) {
            int label = -1;
            try {
                label = std::stoi(label_dir.filename().string());
            } catch (const std::exception&) {
                throw IoError("unknown label directory: " + label_dir.string());
            }
            require<IoError>(label >= 0 && label < ds.class_count,
                             "unknown label directory: " + label_dir.string());
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(label_dir)) {
                if (entry.is_regular_file()) files.push_back(entry.path());
            }
            std::sort(files.begin(), files.end());
            for (const auto& file : files) {
                const auto bytes = fs::file_size(file);
                require<IoError>(bytes == expected * sizeof(float),
                                 "tensor size mismatch in " + file.string() + ": expected " +
                                     std::to_string(expected * sizeof(float)) + " bytes, got " +
                                     std::to_string(bytes));
                Example ex;
                ex.label = label;
                ex.image = Tensor({ds.resolution, ds.resolution, ds.channels});
                std::ifstream f(file, std::ios::binary);
                f.read(reinterpret_cast<char*>(ex.image.data()),
                       static_cast<std::streamsize>(expected * sizeof(float)));
                require<IoError>(f.good(), "failed reading " + file.string());
                ex.image.check_finite("example " + file.string());
                // Normalize into [0,1].
                for (size_t i = 0; i < ex.image.size(); ++i) {
                    ex.image[i] = std::clamp(ex.image[i], 0.f, 1.f);
                }
                ds.split(s).push_back(std::move(ex));
            }
        }
        Rng rng(Rng::derive(shuffle_seed, std::string("load.") + split_name(s)));
        rng.shuffle(ds.split(s));
    }
    return ds;
}

BatchIterator::BatchIterator(const DomainDataset& ds, Split split, int batch_size, uint64_t seed)
    : ds_(&ds), split_(split), batch_size_(batch_size),
      rng_(Rng::derive(seed, std::string("batches.") + split_name(split))) {
    require<SpecError>(batch_size_ >= 1, "batches: batch size must be >= 1");
    const auto& examples = ds_->split(split_);
    require<SpecError>(static_cast<int>(examples.size()) >= batch_size_,
                       "batches: split '" + std::string(split_name(split_)) + "' of " + ds_->name +
                           " has fewer examples than one batch");
    order_.resize(examples.size());
    for (size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
    reshuffle();
}

void BatchIterator::reshuffle() {
    rng_.shuffle(order_);
    cursor_ = 0;
}

Batch BatchIterator::next() {
    const auto& examples = ds_->split(split_);
    if (cursor_ + static_cast<size_t>(batch_size_) > order_.size()) {
        ++epoch_;
        reshuffle();
    }
    Batch batch;
    batch.split = split_;
    const auto& first = examples[static_cast<size_t>(order_[cursor_])].image;
    batch.inputs = Tensor({batch_size_, first.dim(0), first.dim(1), first.dim(2)});
    batch.labels.resize(static_cast<size_t>(batch_size_));
    const size_t stride = first.size();
    for (int i = 0; i < batch_size_; ++i) {
        const Example& ex = examples[static_cast<size_t>(order_[cursor_ + static_cast<size_t>(i)])];
        std::copy(ex.image.data(), ex.image.data() + stride,
                  batch.inputs.data() + static_cast<size_t>(i) * stride);
        batch.labels[static_cast<size_t>(i)] = ex.label;
    }
    cursor_ += static_cast<size_t>(batch_size_);
    return batch;
}

}  // namespace mpnas
