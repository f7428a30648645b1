// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// Multi-label focal loss with per-class weights.
//
//   y = 1:  alpha_c       (1 - p)^gamma  (-ln p)
//   y = 0:  (1 - alpha_c) p^gamma        (-ln(1 - p))
//
// averaged over all B * C entries. Probabilities are clamped to
// [1e-12, 1 - 1e-12] before the logarithm.

#pragma once

#include "molre/core/tensor.hpp"

namespace molre {

inline constexpr double kProbClamp = 1e-12;

struct FocalLossConfig {
    double gamma = 2.0;
    Tensor alpha;  // [C], per-class positive weight in (0, 1]
};

double focal_loss(const Tensor& probs, const Tensor& labels, const FocalLossConfig& cfg);
/// dL/dprobs.
Tensor focal_loss_grad(const Tensor& probs, const Tensor& labels, const FocalLossConfig& cfg);
/// dL/dlogits for probs = sigmoid(logits).
Tensor focal_loss_logit_grad(const Tensor& probs, const Tensor& labels, const FocalLossConfig& cfg);

/// alpha_c = clamp(1 - prevalence_c, lo, hi) from labels [N x C].
Tensor prevalence_weights(const Tensor& labels, double lo = 0.05, double hi = 0.95);

}  // namespace molre
