// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// AdamW with decoupled weight decay and one learning rate per ParamGroup.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "molre/core/param.hpp"
#include "molre/core/tensor.hpp"

namespace molre {

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

struct Moments {
    Tensor m;
    Tensor v;
};

struct OptimizerState {
    AdamWConfig config;
    std::array<double, 2> lr{1e-3, 1e-4};  // indexed by ParamGroup
    std::uint64_t step = 0;
    std::map<std::string, Moments> moments;  // keyed by parameter name

    double group_lr(ParamGroup g) const { return lr[static_cast<std::size_t>(g)]; }
};

/// One update of every parameter from its grad buffer:
///   p <- p (1 - lr wd);  p <- p - lr m_hat / (sqrt(v_hat) + eps)
void adamw_step(OptimizerState& state, std::span<const ParamRef> params);

/// Scales all gradients so their joint L2 norm is at most max_norm; returns the
/// norm before clipping. max_norm <= 0 disables clipping.
double clip_grad_norm(std::span<const ParamRef> params, double max_norm);

}  // namespace molre
