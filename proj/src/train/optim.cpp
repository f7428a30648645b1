// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0

#include "molre/train/optim.hpp"

#include <cmath>

#include "molre/core/errors.hpp"

namespace molre {

void adamw_step(OptimizerState& state, std::span<const ParamRef> params) {
    const auto& cfg = state.config;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);

    for (const auto& p : params) {
        Tensor& w = *p.tensor;
        const auto g = std::as_const(w).grad();
        if (g.size() != w.size()) {
            throw DimensionError("adamw_step: parameter '" + p.name + "' has no gradient of matching size");
        }
        auto [it, inserted] = state.moments.try_emplace(p.name);
        Moments& mom = it->second;
        if (inserted) {
            mom.m = Tensor(w.shape());
            mom.v = Tensor(w.shape());
        } else if (mom.m.shape() != w.shape()) {
            throw DimensionError("adamw_step: moment shape mismatch for '" + p.name + "'");
        }
        const double lr = state.group_lr(p.group);
        const double decay = 1.0 - lr * cfg.weight_decay;
        auto data = w.data();
        for (std::size_t i = 0; i < data.size(); ++i) {
            mom.m[i] = cfg.beta1 * mom.m[i] + (1.0 - cfg.beta1) * g[i];
            mom.v[i] = cfg.beta2 * mom.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double m_hat = mom.m[i] / bc1;
            const double v_hat = mom.v[i] / bc2;
            data[i] *= decay;
            data[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
        }
    }
}

double clip_grad_norm(std::span<const ParamRef> params, double max_norm) {
    double sq = 0.0;
    for (const auto& p : params)
        for (double g : std::as_const(*p.tensor).grad()) sq += g * g;
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double scale = max_norm / norm;
        for (const auto& p : params)
            for (double& g : p.tensor->grad()) g *= scale;
    }
    return norm;
}

}  // namespace molre
