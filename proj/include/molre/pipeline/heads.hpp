// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "molre/core/tensor.hpp"

namespace molre {

/// Single learnable query; alpha = softmax(q F^T / sqrt(d)) over the S slices
/// of each volume and h = alpha F.
struct AttentionPooler {
    Tensor q;  // [d]

    static AttentionPooler create(std::size_t d) { return AttentionPooler{Tensor({d})}; }
    std::size_t dim() const noexcept { return q.size(); }
};

struct PoolCache {
    Tensor weights;  // [B x S]
};

/// F is [B x S x d] (or [(B*S) x d] together with an explicit S); returns [B x d].
Tensor attention_pool(const AttentionPooler& pooler, const Tensor& features);
Tensor attention_pool(const AttentionPooler& pooler, const Tensor& features, std::size_t slices, PoolCache& cache);
/// Accumulates into q.grad; returns dL/dF with the shape of `features`.
Tensor attention_pool_backward(AttentionPooler& pooler, const Tensor& features, std::size_t slices,
                               const PoolCache& cache, const Tensor& dh);

struct ClassifierHead {
    Tensor W;     // [C x d]
    Tensor bias;  // [C]
    bool use_bias = true;

    static ClassifierHead create(std::size_t d, std::size_t classes, bool use_bias = true);
    std::size_t classes() const { return W.rows(); }
    std::size_t dim() const { return W.cols(); }
    std::size_t parameter_count() const noexcept { return W.size() + (use_bias ? bias.size() : 0); }
};

Tensor classifier_logits(const ClassifierHead& head, const Tensor& h);
/// Independent per-class sigmoid probabilities, [B x C].
Tensor classify(const ClassifierHead& head, const Tensor& h);
/// Accumulates into W.grad (and bias.grad); returns dL/dh.
Tensor classifier_backward(ClassifierHead& head, const Tensor& h, const Tensor& dlogits);

}  // namespace molre
