// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0

#include "molre/pipeline/heads.hpp"

#include <cmath>
#include <string>

#include "molre/core/errors.hpp"
#include "molre/core/ops.hpp"

namespace molre {

namespace {

// Flat [(B*S) x d] view of the features regardless of input rank.
std::size_t slice_count(const Tensor& features, std::size_t d) {
    if (features.rank() == 3) {
        if (features.dim(2) != d) {
            throw DimensionError("attention_pool: feature width " + std::to_string(features.dim(2)) +
                                 " does not match query dimension " + std::to_string(d));
        }
        return features.dim(1);
    }
    throw DimensionError("attention_pool: expected [B x S x d] features, got " + shape_to_string(features.shape()));
}

}  // namespace

Tensor attention_pool(const AttentionPooler& pooler, const Tensor& features) {
    const std::size_t S = slice_count(features, pooler.dim());
    PoolCache cache;
    return attention_pool(pooler, features, S, cache);
}

Tensor attention_pool(const AttentionPooler& pooler, const Tensor& features, std::size_t slices, PoolCache& cache) {
    const std::size_t d = pooler.dim();
    if (slices == 0) throw DimensionError("attention_pool: volume has no slices (S = 0)");
    if (features.size() % (slices * d) != 0 || features.size() == 0) {
        throw DimensionError("attention_pool: features " + shape_to_string(features.shape()) +
                             " are not a whole number of [S=" + std::to_string(slices) + " x d=" +
                             std::to_string(d) + "] volumes");
    }
    if (features.shape().back() != d) {
        throw DimensionError("attention_pool: feature width does not match query dimension " + std::to_string(d));
    }
    const std::size_t B = features.size() / (slices * d);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    const auto F = features.data();

    Tensor scores({B, slices});
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t s = 0; s < slices; ++s) {
            const double* f = &F[(b * slices + s) * d];
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += pooler.q[j] * f[j];
            scores.at(b, s) = dot * inv_sqrt_d;
        }
    }
    cache.weights = softmax(scores, 1);

    Tensor h({B, d});
    for (std::size_t b = 0; b < B; ++b) {
        auto hb = h.row(b);
        for (std::size_t s = 0; s < slices; ++s) {
            const double a = cache.weights.at(b, s);
            const double* f = &F[(b * slices + s) * d];
            for (std::size_t j = 0; j < d; ++j) hb[j] += a * f[j];
        }
    }
    return h;
}

Tensor attention_pool_backward(AttentionPooler& pooler, const Tensor& features, std::size_t slices,
                               const PoolCache& cache, const Tensor& dh) {
    const std::size_t d = pooler.dim();
    const std::size_t B = cache.weights.rows();
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    const auto F = features.data();

    Tensor dF(features.shape());
    Tensor dweights({B, slices});
    for (std::size_t b = 0; b < B; ++b) {
        auto g = dh.row(b);
        for (std::size_t s = 0; s < slices; ++s) {
            const std::size_t off = (b * slices + s) * d;
            const double a = cache.weights.at(b, s);
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                dot += g[j] * F[off + j];
                dF[off + j] += a * g[j];
            }
            dweights.at(b, s) = dot;
        }
    }
    const Tensor dscores = softmax_backward(cache.weights, dweights, 1);
    auto dq = pooler.q.grad();
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t s = 0; s < slices; ++s) {
            const std::size_t off = (b * slices + s) * d;
            const double ds = dscores.at(b, s) * inv_sqrt_d;
            for (std::size_t j = 0; j < d; ++j) {
                dq[j] += ds * F[off + j];
                dF[off + j] += ds * pooler.q[j];
            }
        }
    }
    return dF;
}

ClassifierHead ClassifierHead::create(std::size_t d, std::size_t classes, bool use_bias) {
    if (d == 0 || classes == 0) throw ConfigError("classifier: d and C must be positive");
    return ClassifierHead{Tensor({classes, d}), Tensor({classes}), use_bias};
}

Tensor classifier_logits(const ClassifierHead& head, const Tensor& h) {
    if (h.rank() != 2 || h.cols() != head.dim()) {
        throw DimensionError("classify: expected [B x " + std::to_string(head.dim()) + "] input, got " +
                             shape_to_string(h.shape()));
    }
    return linear(h, head.W, head.use_bias ? &head.bias : nullptr);
}

Tensor classify(const ClassifierHead& head, const Tensor& h) { return sigmoid(classifier_logits(head, h)); }

Tensor classifier_backward(ClassifierHead& head, const Tensor& h, const Tensor& dlogits) {
    accumulate(head.W.grad(), matmul_tn(dlogits, h).data());
    if (head.use_bias) {
        auto db = head.bias.grad();
        for (std::size_t n = 0; n < dlogits.rows(); ++n) accumulate(db, dlogits.row(n));
    }
    return matmul(dlogits, head.W);
}

}  // namespace molre
