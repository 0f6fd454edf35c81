// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mpnas/controller.hpp"
#include "mpnas/cost_model.hpp"
#include "mpnas/dataset.hpp"
#include "mpnas/domain_balance.hpp"
#include "mpnas/supernet.hpp"

namespace mpnas {

enum class SearchMode { MPNAS, MDSP_NAS, SP, MRP, SD_NAS };

SearchMode mode_from_name(const std::string& name);
const char* mode_name(SearchMode mode);

struct SearchConfig {
    SearchMode mode = SearchMode::MPNAS;
    int search_epochs = 4;
    int steps_per_epoch = 100;
    int train_epochs = 6;
    int train_steps_per_epoch = 100;
    int search_batch = 16;
    int train_batch = 16;
    int eval_batch = 32;  // validation batch used for the per-step reward
    float search_lr = 1e-2f;  // paper-scale preset: 8e-3
    float train_lr = 3e-2f;   // paper-scale preset: 3.25e-2
    float weight_decay = 1e-4f;
    double warmup_fraction = 0.125;  // controllers frozen for the first 1/8 of steps
    float baseline_momentum = 0.9f;
    float controller_lr = 0.165f;
    RewardConfig reward_cfg;
    BoostingSchedule balance;
    int mrp_trials = 10;
    int resolution = 16;
    uint64_t seed = 1;
    // Diagnostic: all domains share one controller-sampling / data / head-init
    // stream, so identical domains behave identically.
    bool lockstep_domains = false;

    void validate() const;
    long total_search_steps() const {
        return static_cast<long>(search_epochs) * steps_per_epoch;
    }
    long total_train_steps() const {
        return static_cast<long>(train_epochs) * train_steps_per_epoch;
    }
};

// One metrics record per (step, domain). q/reward are present for search
// steps only.
struct StepRecord {
    std::string phase;  // "search" or "train"
    long step = 0;
    int epoch = 0;
    int domain = 0;
    double loss = 0.0;
    double w = 0.0;
    std::optional<double> q;
    std::optional<double> reward;
    uint64_t path_hash = 0;
};

using MetricsSink = std::function<void(const StepRecord&)>;

struct EpochMetrics {
    int epoch = 0;
    std::vector<double> train_loss;    // per domain, mean over the epoch
    std::vector<double> val_accuracy;  // per domain, mean over the epoch
    std::vector<double> reward;        // per domain, mean over the epoch
    double controller_entropy = 0.0;
    double step_ms = 0.0;  // mean wall time per step; console diagnostics only
};

// Algorithm-1 search over one super-network. Supports the multi-controller
// mode (one controller per domain) and the single-controller mode (one path
// shared by every domain, mean accuracy as the reward).
class SearchEngine {
public:
    SearchEngine(SearchSpaceSpec space, const std::vector<DomainDataset>* datasets,
                 SearchConfig cfg);

    // One search iteration: per domain sample path / reward / train loss,
    // then one joint weight update, then controller updates (post warm-up).
    void search_step(const MetricsSink& sink = {});

    std::vector<EpochMetrics> run_search(const MetricsSink& sink = {});

    // Most-likely path per controller (single-controller: replicated).
    std::vector<PathSelection> final_paths() const;

    SuperNetwork& net() { return *net_; }
    const SuperNetwork& net() const { return *net_; }
    const std::vector<std::unique_ptr<DomainController>>& controllers() const {
        return controllers_;
    }
    std::vector<DomainKit>& kits() { return kits_; }
    long step() const { return step_; }
    long warmup_steps() const;
    // Model forward passes so far (2 per domain per step: one validation
    // batch for the reward, one training batch for the loss).
    long long forward_passes() const { return forward_passes_; }
    const LatencyCalibration& calibration() const { return calibration_; }

    // Validation accuracy of a path under the current shared weights.
    double evaluate_path(int domain, const PathSelection& path);

private:
    SearchConfig cfg_;
    std::unique_ptr<SuperNetwork> net_;
    const std::vector<DomainDataset>* datasets_;
    std::vector<DomainKit> kits_;
    std::vector<std::unique_ptr<DomainController>> controllers_;
    std::vector<Rng> sample_rngs_;
    std::vector<BatchIterator> train_iters_;
    std::vector<BatchIterator> val_iters_;
    std::unique_ptr<RmsProp> optimizer_;
    LatencyCalibration calibration_;
    long step_ = 0;
    long long forward_passes_ = 0;

    // Per-epoch aggregation.
    std::vector<double> epoch_loss_, epoch_q_, epoch_reward_;
    int epoch_records_ = 0;
};

struct JointTrainResult {
    std::vector<double> test_accuracy;   // per domain
    std::vector<double> val_accuracy;    // per domain, final epoch
    std::vector<double> final_loss;      // per domain, last epoch mean
};

// Trains a merged multi-path model from scratch (fresh weights) on all
// domains: per step one batch per domain, losses transformed by the boosting
// schedule, one joint backward with shared-node gradients accumulated in
// domain order.
JointTrainResult train_joint_model(const SearchSpaceSpec& spec,
                                   const std::vector<DomainDataset>& datasets,
                                   const std::vector<PathSelection>& paths, const SearchConfig& cfg,
                                   uint64_t weight_seed, const MetricsSink& sink = {},
                                   SuperNetwork* net_out = nullptr,
                                   std::vector<DomainKit>* kits_out = nullptr);

// Full-split accuracy of a graph, batched, deterministic order.
double evaluate_accuracy(ComputeGraph& graph, const std::vector<Example>& examples, int batch_size);

// Mode orchestration ------------------------------------------------------

struct SearchPhaseOutput {
    // Usually one set of per-domain paths; MRP emits one set per trial.
    std::vector<std::vector<PathSelection>> path_sets;
    std::vector<EpochMetrics> epochs;  // empty for MRP
    // Search-phase shared weights and heads, for checkpointing. Null for the
    // modes without a single search network (mrp, sdnas).
    std::shared_ptr<SuperNetwork> net;
    std::vector<DomainKit> kits;
};

SearchPhaseOutput run_search_phase(const SearchSpaceSpec& spec,
                                   const std::vector<DomainDataset>& datasets,
                                   const SearchConfig& cfg, const MetricsSink& sink = {});

struct TrainPhaseOutput {
    std::vector<JointTrainResult> per_set;
    std::vector<double> mean_test_accuracy;  // per domain, averaged over sets
    std::vector<double> mean_val_accuracy;
};

TrainPhaseOutput run_train_phase(const SearchSpaceSpec& spec,
                                 const std::vector<DomainDataset>& datasets, const SearchConfig& cfg,
                                 const std::vector<std::vector<PathSelection>>& path_sets,
                                 const MetricsSink& sink = {});

}  // namespace mpnas
