// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mpnas/optimizer.hpp"
#include "mpnas/rng.hpp"
#include "mpnas/search_space.hpp"

namespace mpnas {

// Policy over one domain's path: an independent categorical distribution per
// decision point (softmax over a logit vector), trained with REINFORCE
// against an exponential-moving-average reward baseline.
class DomainController {
public:
    DomainController(const std::vector<DecisionPoint>& decisions, uint64_t space_hash,
                     const std::string& name, float baseline_momentum = 0.9f,
                     Adam::Options adam = {});

    // Samples every decision independently; returns the path and
    // log P(path) = sum of log-probabilities of the chosen options.
    std::pair<PathSelection, double> sample_path(Rng& rng) const;

    // One policy-gradient step on -(reward - baseline) * log P(path), then
    // baseline <- momentum * baseline + (1 - momentum) * reward.
    void reinforce_update(const PathSelection& path, double reward);

    // Per-decision argmax of the logits; ties resolved to the lowest index.
    PathSelection most_likely_path() const;

    std::vector<double> probabilities(const std::string& decision_id) const;

    // d log P(path) / d logits, per decision: one_hot(chosen) - p.
    std::map<std::string, std::vector<double>> log_prob_grad(const PathSelection& path) const;

    // Sum of per-decision categorical entropies (nats).
    double entropy() const;

    double baseline() const { return baseline_; }
    uint64_t space_hash() const { return space_hash_; }

    // Logit tensors, keyed by decision id ("<name>.<decision>" parameter
    // names); exposed for checkpointing and freeze assertions.
    const std::map<std::string, ParamPtr>& logits() const { return logits_; }
    ParamPtr logit_param(const std::string& decision_id) const;

private:
    std::vector<DecisionPoint> decisions_;
    uint64_t space_hash_ = 0;
    std::map<std::string, ParamPtr> logits_;
    double baseline_ = 0.0;
    float baseline_momentum_ = 0.9f;
    Adam adam_;
};

}  // namespace mpnas
