// Copyright 2026 The MPNAS Authors
// SPDX-License-Identifier: Apache-2.0

#include "mpnas/controller.hpp"

#include <cmath>

#include "mpnas/errors.hpp"

namespace mpnas {

namespace {

std::vector<double> softmax(const Tensor& logits) {
    double m = logits[0];
    for (size_t i = 1; i < logits.size(); ++i) m = std::max(m, static_cast<double>(logits[i]));
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(static_cast<double>(logits[i]) - m);
        sum += p[i];
    }
    for (auto& x : p) x /= sum;
    return p;
}

}  // namespace

DomainController::DomainController(const std::vector<DecisionPoint>& decisions, uint64_t space_hash,
                                   const std::string& name, float baseline_momentum,
                                   Adam::Options adam)
    : decisions_(decisions), space_hash_(space_hash), baseline_momentum_(baseline_momentum),
      adam_(adam) {
    for (const auto& d : decisions_) {
        logits_[d.id] = std::make_shared<Parameter>(name + "." + d.id, std::vector<int>{d.arity()});
    }
}

ParamPtr DomainController::logit_param(const std::string& decision_id) const {
    auto it = logits_.find(decision_id);
    require(it != logits_.end(), "controller: unknown decision " + decision_id);
    return it->second;
}

std::pair<PathSelection, double> DomainController::sample_path(Rng& rng) const {
    PathSelection path;
    path.space_hash = space_hash_;
    double log_prob = 0.0;
    for (const auto& d : decisions_) {
        const auto p = softmax(logits_.at(d.id)->value);
        const double u = rng.next_double();
        double cdf = 0.0;
        int chosen = d.arity() - 1;
        for (int i = 0; i < d.arity(); ++i) {
            cdf += p[static_cast<size_t>(i)];
            if (u < cdf) {
                chosen = i;
                break;
            }
        }
        path.choices[d.id] = chosen;
        log_prob += std::log(p[static_cast<size_t>(chosen)]);
    }
    return {path, log_prob};
}

std::map<std::string, std::vector<double>> DomainController::log_prob_grad(
    const PathSelection& path) const {
    path.validate_for(decisions_, space_hash_);
    std::map<std::string, std::vector<double>> grad;
    for (const auto& d : decisions_) {
        auto p = softmax(logits_.at(d.id)->value);
        const int chosen = path.option_index(d.id);
        std::vector<double> g(p.size());
        for (size_t i = 0; i < p.size(); ++i) g[i] = -p[i];
        g[static_cast<size_t>(chosen)] += 1.0;
        grad[d.id] = std::move(g);
    }
    return grad;
}

void DomainController::reinforce_update(const PathSelection& path, double reward) {
    require<Error>(std::isfinite(reward), "controller: non-finite reward");
    const double advantage = reward - baseline_;
    auto lp_grad = log_prob_grad(path);

    std::vector<ParamPtr> params;
    for (const auto& d : decisions_) {
        ParamPtr p = logits_.at(d.id);
        const auto& g = lp_grad.at(d.id);
        // Minimizing -(advantage) * log P, so the logit gradient is
        // -advantage * dlogP/dlogit.
        for (size_t i = 0; i < p->grad.size(); ++i) {
            p->grad[i] = static_cast<float>(-advantage * g[i]);
        }
        params.push_back(std::move(p));
    }
    adam_.step(params);
    for (auto& p : params) p->grad.zero();

    baseline_ = baseline_momentum_ * baseline_ + (1.0 - baseline_momentum_) * reward;
}

PathSelection DomainController::most_likely_path() const {
    PathSelection path;
    path.space_hash = space_hash_;
    for (const auto& d : decisions_) {
        const Tensor& logit = logits_.at(d.id)->value;
        int best = 0;
        for (int i = 1; i < d.arity(); ++i) {
            if (logit[static_cast<size_t>(i)] > logit[static_cast<size_t>(best)]) best = i;
        }
        path.choices[d.id] = best;
    }
    return path;
}

std::vector<double> DomainController::probabilities(const std::string& decision_id) const {
    return softmax(logit_param(decision_id)->value);
}

double DomainController::entropy() const {
    double h = 0.0;
    for (const auto& d : decisions_) {
        for (double p : softmax(logits_.at(d.id)->value)) {
            if (p > 0.0) h -= p * std::log(p);
        }
    }
    return h;
}

}  // namespace mpnas
