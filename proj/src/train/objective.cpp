// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0

#include "molre/train/objective.hpp"

#include <algorithm>
#include <cmath>

#include "molre/core/errors.hpp"

namespace molre {

namespace {

void check(const Tensor& probs, const Tensor& labels, const FocalLossConfig& cfg) {
    if (probs.rank() != 2 || probs.shape() != labels.shape()) {
        throw DimensionError("focal_loss: probs " + shape_to_string(probs.shape()) + " vs labels " +
                             shape_to_string(labels.shape()));
    }
    if (cfg.alpha.size() != probs.cols()) {
        throw DimensionError("focal_loss: " + std::to_string(cfg.alpha.size()) + " class weights for " +
                             std::to_string(probs.cols()) + " classes");
    }
    if (cfg.gamma < 0.0) throw ConfigError("focal_loss: gamma must be nonnegative");
}

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

// Derivative of the per-entry loss with respect to p; zero where the clamp is active.
double entry_grad(double p, double y, double alpha, double gamma) {
    if (p <= kProbClamp || p >= 1.0 - kProbClamp) return 0.0;
    if (y == 1.0) {
        const double q = 1.0 - p;
        const double focus = gamma == 0.0 ? 0.0 : gamma * std::pow(q, gamma - 1.0) * std::log(p);
        return alpha * (focus - std::pow(q, gamma) / p);
    }
    const double q = 1.0 - p;
    const double focus = gamma == 0.0 ? 0.0 : gamma * std::pow(p, gamma - 1.0) * (-std::log(q));
    return (1.0 - alpha) * (focus + std::pow(p, gamma) / q);
}

}  // namespace

double focal_loss(const Tensor& probs, const Tensor& labels, const FocalLossConfig& cfg) {
    check(probs, labels, cfg);
    const std::size_t N = probs.rows(), C = probs.cols();
    double total = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t c = 0; c < C; ++c) {
            const double p = clamp_prob(probs.at(n, c));
            const double a = cfg.alpha[c];
            if (labels.at(n, c) == 1.0) {
                total += a * std::pow(1.0 - p, cfg.gamma) * -std::log(p);
            } else {
                total += (1.0 - a) * std::pow(p, cfg.gamma) * -std::log(1.0 - p);
            }
        }
    }
    return total / static_cast<double>(N * C);
}

Tensor focal_loss_grad(const Tensor& probs, const Tensor& labels, const FocalLossConfig& cfg) {
    check(probs, labels, cfg);
    const std::size_t N = probs.rows(), C = probs.cols();
    const double inv = 1.0 / static_cast<double>(N * C);
    Tensor g(probs.shape());
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c)
            g.at(n, c) = inv * entry_grad(probs.at(n, c), labels.at(n, c), cfg.alpha[c], cfg.gamma);
    return g;
}

Tensor focal_loss_logit_grad(const Tensor& probs, const Tensor& labels, const FocalLossConfig& cfg) {
    Tensor g = focal_loss_grad(probs, labels, cfg);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= probs[i] * (1.0 - probs[i]);
    return g;
}

Tensor prevalence_weights(const Tensor& labels, double lo, double hi) {
    if (labels.rank() != 2 || labels.rows() == 0) throw DimensionError("prevalence_weights: need [N x C], N >= 1");
    if (!(lo <= hi)) throw ConfigError("prevalence_weights: clamp bounds out of order");
    const std::size_t N = labels.rows(), C = labels.cols();
    Tensor alpha({C});
    for (std::size_t c = 0; c < C; ++c) {
        double pos = 0.0;
        for (std::size_t n = 0; n < N; ++n) pos += labels.at(n, c) == 1.0;
        alpha[c] = std::clamp(1.0 - pos / static_cast<double>(N), lo, hi);
    }
    return alpha;
}

}  // namespace molre
