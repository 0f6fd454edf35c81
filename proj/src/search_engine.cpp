// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "mpnas/search_engine.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "mpnas/errors.hpp"

namespace mpnas {

SearchMode mode_from_name(const std::string& name) {
    if (name == "mpnas") return SearchMode::MPNAS;
    if (name == "mdsp") return SearchMode::MDSP_NAS;
    if (name == "sp") return SearchMode::SP;
    if (name == "mrp") return SearchMode::MRP;
    if (name == "sdnas") return SearchMode::SD_NAS;
    throw SpecError("unknown mode '" + name + "' (expected mpnas|mdsp|sp|mrp|sdnas)");
}

const char* mode_name(SearchMode mode) {
    switch (mode) {
        case SearchMode::MPNAS: return "mpnas";
        case SearchMode::MDSP_NAS: return "mdsp";
        case SearchMode::SP: return "sp";
        case SearchMode::MRP: return "mrp";
        case SearchMode::SD_NAS: return "sdnas";
    }
    return "?";
}

void SearchConfig::validate() const {
    require<SpecError>(search_epochs > 0 && steps_per_epoch > 0,
                       "config: search epochs/steps must be positive");
    require<SpecError>(train_epochs > 0 && train_steps_per_epoch > 0,
                       "config: train epochs/steps must be positive");
    require<SpecError>(search_batch > 0 && train_batch > 0 && eval_batch > 0,
                       "config: batch sizes must be positive");
    require<SpecError>(warmup_fraction >= 0.0 && warmup_fraction < 1.0,
                       "config: warmup_fraction must lie in [0,1)");
    require<SpecError>(mrp_trials > 0, "config: mrp_trials must be positive");
    require<SpecError>(resolution > 0, "config: resolution must be positive");
    reward_cfg.validate();
    balance.validate();
}

namespace {

uint64_t domain_stream(const SearchConfig& cfg, uint64_t index) {
    return cfg.lockstep_domains ? 0 : index;
}

DomainKit make_domain_kit(const SuperNetwork& net, int classes, int domain, uint64_t seed,
                          bool lockstep) {
    const int d = lockstep ? 0 : domain;
    return net.make_kit(classes, "d" + std::to_string(d),
                        Rng::derive(seed, "kit", static_cast<uint64_t>(d)));
}

}  // namespace

SearchEngine::SearchEngine(SearchSpaceSpec space, const std::vector<DomainDataset>* datasets,
                           SearchConfig cfg)
    : cfg_(std::move(cfg)), datasets_(datasets) {
    cfg_.validate();
    require<SpecError>(cfg_.mode == SearchMode::MPNAS || cfg_.mode == SearchMode::MDSP_NAS,
                       "SearchEngine runs the controller modes (mpnas/mdsp); use "
                       "run_search_phase for sp/mrp/sdnas");
    require<SpecError>(datasets_ != nullptr && !datasets_->empty(),
                       "engine: at least one domain dataset required");
    for (const auto& ds : *datasets_) {
        require<SpecError>(ds.resolution == cfg_.resolution,
                           "engine: dataset " + ds.name + " resolution " +
                               std::to_string(ds.resolution) + " != configured " +
                               std::to_string(cfg_.resolution));
    }

    net_ = std::make_unique<SuperNetwork>(std::move(space),
                                          Rng::derive(cfg_.seed, "search.weights"));
    calibration_ = LatencyCalibration::identity(net_->spec(), cfg_.resolution,
                                                cfg_.reward_cfg.target_latency_ms);

    const size_t n = datasets_->size();
    const size_t n_controllers = (cfg_.mode == SearchMode::MDSP_NAS) ? 1 : n;
    for (size_t i = 0; i < n_controllers; ++i) {
        Adam::Options adam;
        adam.lr = cfg_.controller_lr;
        controllers_.push_back(std::make_unique<DomainController>(
            net_->decisions(), net_->space_hash(), "ctrl.d" + std::to_string(i),
            cfg_.baseline_momentum, adam));
        sample_rngs_.emplace_back(
            Rng::derive(cfg_.seed, "controller.sample", domain_stream(cfg_, i)));
    }
    for (size_t i = 0; i < n; ++i) {
        const auto& ds = (*datasets_)[i];
        kits_.push_back(make_domain_kit(*net_, ds.class_count, static_cast<int>(i), cfg_.seed,
                                        cfg_.lockstep_domains));
        train_iters_.emplace_back(ds, Split::Train, cfg_.search_batch,
                                  Rng::derive(cfg_.seed, "search.data.train",
                                              domain_stream(cfg_, i)));
        val_iters_.emplace_back(ds, Split::Validation, cfg_.eval_batch,
                                Rng::derive(cfg_.seed, "search.data.val", domain_stream(cfg_, i)));
    }

    RmsProp::Options opt;
    opt.lr = cfg_.search_lr;
    opt.weight_decay = cfg_.weight_decay;
    optimizer_ = std::make_unique<RmsProp>(opt);

    epoch_loss_.assign(n, 0.0);
    epoch_q_.assign(n, 0.0);
    epoch_reward_.assign(n, 0.0);
}

long SearchEngine::warmup_steps() const {
    return static_cast<long>(cfg_.warmup_fraction * static_cast<double>(cfg_.total_search_steps()));
}

double SearchEngine::evaluate_path(int domain, const PathSelection& path) {
    ComputeGraph graph = net_->instantiate(path, kits_[static_cast<size_t>(domain)]);
    Batch batch = val_iters_[static_cast<size_t>(domain)].next();
    require(batch.split == Split::Validation, "engine: reward must come from the validation split");
    ++forward_passes_;
    return accuracy(graph.forward(batch.inputs), batch.labels);
}

void SearchEngine::search_step(const MetricsSink& sink) {
    const size_t n = datasets_->size();
    const long total = cfg_.total_search_steps();
    const double progress = total > 1 ? static_cast<double>(step_) / static_cast<double>(total - 1)
                                      : 1.0;

    // Per domain: sample a path, score it on a validation batch, compute the
    // training loss. Weight updates happen only after every domain ran.
    std::vector<PathSelection> paths(n);
    std::vector<double> rewards(n), qualities(n), losses(n);
    std::vector<ComputeGraph> graphs;
    std::vector<Tensor> loss_grads(n);
    graphs.reserve(n);

    for (size_t i = 0; i < n; ++i) {
        if (cfg_.mode == SearchMode::MDSP_NAS) {
            if (i == 0) {
                paths[0] = controllers_[0]->sample_path(sample_rngs_[0]).first;
            } else {
                paths[i] = paths[0];
            }
        } else {
            paths[i] = controllers_[i]->sample_path(sample_rngs_[i]).first;
        }

        graphs.push_back(net_->instantiate(paths[i], kits_[i]));
        ComputeGraph& graph = graphs.back();

        Batch val = val_iters_[i].next();
        require(val.split == Split::Validation, "engine: reward must come from the validation split");
        ++forward_passes_;
        qualities[i] = accuracy(graph.forward(val.inputs), val.labels);
        const double latency =
            latency_estimate(net_->spec(), paths[i], calibration_, cfg_.resolution);
        rewards[i] = reward(qualities[i], latency, cfg_.reward_cfg);

        Batch train = train_iters_[i].next();
        require(train.split == Split::Train, "engine: weight updates use the training split only");
        ++forward_passes_;
        Tensor logits = graph.forward(train.inputs);
        LossResult lr = softmax_cross_entropy(logits, train.labels);
        losses[i] = lr.loss;
        loss_grads[i] = std::move(lr.logits_grad);
    }

    // Joint backward: d(sum_i h(L_i))/dtheta accumulates h'(L_i)-scaled
    // gradients in fixed domain order.
    LossTransform transform = transform_losses(losses, cfg_.balance, progress);
    for (size_t i = 0; i < n; ++i) {
        Tensor scaled = loss_grads[i];
        const float s = static_cast<float>(transform.weights[i]);
        for (size_t j = 0; j < scaled.size(); ++j) scaled[j] *= s;
        graphs[i].backward(scaled);
    }

    std::vector<ParamPtr> touched;
    {
        std::set<const Parameter*> seen;
        for (auto& g : graphs) {
            for (auto& p : g.parameters()) {
                if (seen.insert(p.get()).second) touched.push_back(p);
            }
        }
    }
    optimizer_->step(touched, cosine_lr_scale(step_, total));
    for (auto& p : touched) p->grad.zero();

    // REINFORCE updates, skipped while controllers are warming up.
    if (step_ >= warmup_steps()) {
        if (cfg_.mode == SearchMode::MDSP_NAS) {
            double mean_q = 0.0;
            for (double q : qualities) mean_q += q;
            mean_q /= static_cast<double>(n);
            controllers_[0]->reinforce_update(paths[0], mean_q);
        } else {
            for (size_t i = 0; i < n; ++i) {
                controllers_[i]->reinforce_update(paths[i], rewards[i]);
            }
        }
    }

    const int epoch = static_cast<int>(step_ / cfg_.steps_per_epoch);
    for (size_t i = 0; i < n; ++i) {
        if (sink) {
            StepRecord rec;
            rec.phase = "search";
            rec.step = step_;
            rec.epoch = epoch;
            rec.domain = static_cast<int>(i);
            rec.loss = losses[i];
            rec.w = transform.w;
            rec.q = qualities[i];
            rec.reward = rewards[i];
            rec.path_hash = paths[i].hash();
            sink(rec);
        }
        epoch_loss_[i] += losses[i];
        epoch_q_[i] += qualities[i];
        epoch_reward_[i] += rewards[i];
    }
    ++epoch_records_;
    ++step_;
}

std::vector<EpochMetrics> SearchEngine::run_search(const MetricsSink& sink) {
    std::vector<EpochMetrics> epochs;
    const size_t n = datasets_->size();
    for (int e = 0; e < cfg_.search_epochs; ++e) {
        const auto t0 = std::chrono::steady_clock::now();
        std::fill(epoch_loss_.begin(), epoch_loss_.end(), 0.0);
        std::fill(epoch_q_.begin(), epoch_q_.end(), 0.0);
        std::fill(epoch_reward_.begin(), epoch_reward_.end(), 0.0);
        epoch_records_ = 0;
        for (int s = 0; s < cfg_.steps_per_epoch; ++s) search_step(sink);
        const auto t1 = std::chrono::steady_clock::now();

        EpochMetrics em;
        em.epoch = e;
        em.train_loss.resize(n);
        em.val_accuracy.resize(n);
        em.reward.resize(n);
        for (size_t i = 0; i < n; ++i) {
            em.train_loss[i] = epoch_loss_[i] / epoch_records_;
            em.val_accuracy[i] = epoch_q_[i] / epoch_records_;
            em.reward[i] = epoch_reward_[i] / epoch_records_;
        }
        for (const auto& c : controllers_) em.controller_entropy += c->entropy();
        em.controller_entropy /= static_cast<double>(controllers_.size());
        em.step_ms = std::chrono::duration<double, std::milli>(t1 - t0).count() /
                     cfg_.steps_per_epoch;
        epochs.push_back(std::move(em));
    }
    return epochs;
}

std::vector<PathSelection> SearchEngine::final_paths() const {
    std::vector<PathSelection> out;
    const size_t n = datasets_->size();
    if (cfg_.mode == SearchMode::MDSP_NAS) {
        PathSelection p = controllers_[0]->most_likely_path();
        out.assign(n, p);
    } else {
        for (size_t i = 0; i < n; ++i) out.push_back(controllers_[i]->most_likely_path());
    }
    return out;
}

double evaluate_accuracy(ComputeGraph& graph, const std::vector<Example>& examples,
                         int batch_size) {
    require<SpecError>(!examples.empty(), "evaluate: empty split");
    size_t hits = 0;
    size_t i = 0;
    while (i < examples.size()) {
        const size_t take = std::min(static_cast<size_t>(batch_size), examples.size() - i);
        const auto& shape = examples[i].image.shape();
        Tensor inputs({static_cast<int>(take), shape[0], shape[1], shape[2]});
        std::vector<int> labels(take);
        const size_t stride = examples[i].image.size();
        for (size_t j = 0; j < take; ++j) {
            std::copy(examples[i + j].image.data(), examples[i + j].image.data() + stride,
                      inputs.data() + j * stride);
            labels[j] = examples[i + j].label;
        }
        const Tensor logits = graph.forward(inputs);
        const int c = logits.dim(1);
        for (size_t j = 0; j < take; ++j) {
            const float* row = logits.data() + j * static_cast<size_t>(c);
            int best = 0;
            for (int k = 1; k < c; ++k) {
                if (row[k] > row[best]) best = k;
            }
            if (best == labels[j]) ++hits;
        }
        i += take;
    }
    return static_cast<double>(hits) / static_cast<double>(examples.size());
}

JointTrainResult train_joint_model(const SearchSpaceSpec& spec,
                                   const std::vector<DomainDataset>& datasets,
                                   const std::vector<PathSelection>& paths, const SearchConfig& cfg,
                                   uint64_t weight_seed, const MetricsSink& sink,
                                   SuperNetwork* net_out, std::vector<DomainKit>* kits_out) {
    cfg.validate();
    require<SpecError>(paths.size() == datasets.size(),
                       "train: one path per domain required");
    const size_t n = datasets.size();

    // Trained from scratch: fresh shared weights and fresh per-domain kits.
    auto net = std::make_unique<SuperNetwork>(spec, weight_seed);
    std::vector<DomainKit> kits;
    std::vector<BatchIterator> iters;
    for (size_t i = 0; i < n; ++i) {
        kits.push_back(make_domain_kit(*net, datasets[i].class_count, static_cast<int>(i),
                                       weight_seed, cfg.lockstep_domains));
        iters.emplace_back(datasets[i], Split::Train, cfg.train_batch,
                           Rng::derive(cfg.seed, "train.data",
                                       cfg.lockstep_domains ? 0 : static_cast<uint64_t>(i)));
    }
    JointModel joint = merge(*net, paths, std::move(kits));

    RmsProp::Options opt;
    opt.lr = cfg.train_lr;
    opt.weight_decay = cfg.weight_decay;
    RmsProp optimizer(opt);
    std::vector<ParamPtr> params = joint.parameters();

    const long total = cfg.total_train_steps();
    std::vector<double> losses(n, 0.0), epoch_loss(n, 0.0);
    JointTrainResult result;
    result.final_loss.assign(n, 0.0);

    for (long step = 0; step < total; ++step) {
        const double progress =
            total > 1 ? static_cast<double>(step) / static_cast<double>(total - 1) : 1.0;
        std::vector<Tensor> grads(n);
        for (size_t i = 0; i < n; ++i) {
            Batch batch = iters[i].next();
            require(batch.split == Split::Train, "train: weight updates use the training split only");
            Tensor logits = joint.domain_forward(static_cast<int>(i), batch.inputs);
            LossResult lr = softmax_cross_entropy(logits, batch.labels);
            losses[i] = lr.loss;
            grads[i] = std::move(lr.logits_grad);
        }
        LossTransform transform = transform_losses(losses, cfg.balance, progress);
        for (size_t i = 0; i < n; ++i) {
            const float s = static_cast<float>(transform.weights[i]);
            for (size_t j = 0; j < grads[i].size(); ++j) grads[i][j] *= s;
            joint.domain_graph(static_cast<int>(i)).backward(grads[i]);
        }
        optimizer.step(params, cosine_lr_scale(step, total));
        for (auto& p : params) p->grad.zero();

        const int epoch = static_cast<int>(step / cfg.train_steps_per_epoch);
        for (size_t i = 0; i < n; ++i) {
            epoch_loss[i] += losses[i];
            if (sink) {
                StepRecord rec;
                rec.phase = "train";
                rec.step = step;
                rec.epoch = epoch;
                rec.domain = static_cast<int>(i);
                rec.loss = losses[i];
                rec.w = transform.w;
                rec.path_hash = paths[i].hash();
                sink(rec);
            }
        }
        if ((step + 1) % cfg.train_steps_per_epoch == 0) {
            for (size_t i = 0; i < n; ++i) {
                result.final_loss[i] = epoch_loss[i] / cfg.train_steps_per_epoch;
                epoch_loss[i] = 0.0;
            }
        }
    }

    result.val_accuracy.resize(n);
    result.test_accuracy.resize(n);
    for (size_t i = 0; i < n; ++i) {
        result.val_accuracy[i] = evaluate_accuracy(joint.domain_graph(static_cast<int>(i)),
                                                   datasets[i].validation, cfg.eval_batch);
        result.test_accuracy[i] = evaluate_accuracy(joint.domain_graph(static_cast<int>(i)),
                                                    datasets[i].test, cfg.eval_batch);
    }
    if (kits_out) *kits_out = joint.kits();
    if (net_out) {
        // Hand the trained store to the caller (checkpointing).
        *net_out = std::move(*net);
    }
    return result;
}

SearchPhaseOutput run_search_phase(const SearchSpaceSpec& spec,
                                   const std::vector<DomainDataset>& datasets,
                                   const SearchConfig& cfg, const MetricsSink& sink) {
    cfg.validate();
    require<SpecError>(!datasets.empty(), "search: at least one domain required");
    SearchPhaseOutput out;
    switch (cfg.mode) {
        case SearchMode::MPNAS:
        case SearchMode::MDSP_NAS: {
            SearchEngine engine(spec, &datasets, cfg);
            out.epochs = engine.run_search(sink);
            out.path_sets.push_back(engine.final_paths());
            out.kits = std::move(engine.kits());
            out.net = std::make_shared<SuperNetwork>(std::move(engine.net()));
            break;
        }
        case SearchMode::SP: {
            // Pre-searched single path: a single-domain search on domain 0,
            // then every domain shares that backbone.
            SearchConfig sub = cfg;
            sub.mode = SearchMode::MPNAS;
            std::vector<DomainDataset> first(datasets.begin(), datasets.begin() + 1);
            SearchEngine engine(spec, &first, sub);
            out.epochs = engine.run_search(sink);
            out.path_sets.push_back(
                std::vector<PathSelection>(datasets.size(), engine.final_paths()[0]));
            out.kits = std::move(engine.kits());
            out.net = std::make_shared<SuperNetwork>(std::move(engine.net()));
            break;
        }
        case SearchMode::MRP: {
            const auto decisions = compile(spec);
            const uint64_t space_hash = spec.hash();
            for (int t = 0; t < cfg.mrp_trials; ++t) {
                std::vector<PathSelection> set;
                for (size_t d = 0; d < datasets.size(); ++d) {
                    Rng rng(Rng::derive(cfg.seed, "mrp.paths",
                                        static_cast<uint64_t>(t) * 1024 + d));
                    set.push_back(uniform_random_path(decisions, space_hash, rng));
                }
                out.path_sets.push_back(std::move(set));
            }
            break;
        }
        case SearchMode::SD_NAS: {
            std::vector<PathSelection> set;
            for (size_t d = 0; d < datasets.size(); ++d) {
                SearchConfig sub = cfg;
                sub.mode = SearchMode::MPNAS;
                sub.seed = Rng::derive(cfg.seed, "sdnas.search", d);
                std::vector<DomainDataset> one(datasets.begin() + static_cast<long>(d),
                                               datasets.begin() + static_cast<long>(d) + 1);
                SearchEngine engine(spec, &one, sub);
                engine.run_search(sink);
                set.push_back(engine.final_paths()[0]);
            }
            out.path_sets.push_back(std::move(set));
            break;
        }
    }
    return out;
}

TrainPhaseOutput run_train_phase(const SearchSpaceSpec& spec,
                                 const std::vector<DomainDataset>& datasets,
                                 const SearchConfig& cfg,
                                 const std::vector<std::vector<PathSelection>>& path_sets,
                                 const MetricsSink& sink) {
    cfg.validate();
    require<SpecError>(!path_sets.empty(), "train: no path sets");
    TrainPhaseOutput out;
    const size_t n = datasets.size();

    for (size_t set_index = 0; set_index < path_sets.size(); ++set_index) {
        const auto& paths = path_sets[set_index];
        require<SpecError>(paths.size() == n, "train: path set size must match domain count");
        JointTrainResult r;
        if (cfg.mode == SearchMode::SD_NAS) {
            // Bundled single-domain models: each trained independently.
            r.test_accuracy.resize(n);
            r.val_accuracy.resize(n);
            r.final_loss.resize(n);
            for (size_t d = 0; d < n; ++d) {
                SearchConfig sub = cfg;
                sub.seed = Rng::derive(cfg.seed, "sdnas.train.data", d);
                std::vector<DomainDataset> one(datasets.begin() + static_cast<long>(d),
                                               datasets.begin() + static_cast<long>(d) + 1);
                std::vector<PathSelection> one_path{paths[d]};
                JointTrainResult single = train_joint_model(
                    spec, one, one_path, sub, Rng::derive(cfg.seed, "sdnas.train.weights", d), sink);
                r.test_accuracy[d] = single.test_accuracy[0];
                r.val_accuracy[d] = single.val_accuracy[0];
                r.final_loss[d] = single.final_loss[0];
            }
        } else {
            r = train_joint_model(spec, datasets, paths, cfg,
                                  Rng::derive(cfg.seed, "train.weights", set_index), sink);
        }
        out.per_set.push_back(std::move(r));
    }

    out.mean_test_accuracy.assign(n, 0.0);
    out.mean_val_accuracy.assign(n, 0.0);
    for (const auto& r : out.per_set) {
        for (size_t i = 0; i < n; ++i) {
            out.mean_test_accuracy[i] += r.test_accuracy[i];
            out.mean_val_accuracy[i] += r.val_accuracy[i];
        }
    }
    for (size_t i = 0; i < n; ++i) {
        out.mean_test_accuracy[i] /= static_cast<double>(out.per_set.size());
        out.mean_val_accuracy[i] /= static_cast<double>(out.per_set.size());
    }
    return out;
}

}  // namespace mpnas
