// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// Frozen feature extractors standing in for pretrained foundation models.
//
// 2D stub: three strided 3x3 conv + ReLU layers over one slice, global average
// pool, then a frozen projection to d followed by tanh. An optional LoRA
// adapter sits on the projection and is the only trainable part.
//
// 3D stub: strided 3x3x3 conv + ReLU layers over the whole volume, mean over
// the spatial grid, then the same projection head. It yields one pooled
// embedding per volume.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "molre/adapters/adapters.hpp"
#include "molre/core/tensor.hpp"

namespace molre {

struct ConvLayer {
    Tensor weight;  // [out x in x k x k] (2D) or [out x in x k x k x k] (3D)
    Tensor bias;    // [out]
};

struct ProjectionCache {
    Tensor input;     // normalized embeddings, [N x p]
    Tensor features;  // tanh output, [N x d]
};

/// tanh(n W^T + lora(n)) with n = (z - shift) * scale per channel. W and the
/// normalization are frozen; empty shift/scale means no normalization.
struct FeatureProjection {
    Tensor weight;  // [d x p]
    Tensor shift;   // [p] or empty
    Tensor scale;   // [p] or empty
    std::optional<LoraAdapter> lora;

    Tensor normalize(const Tensor& z) const;
    /// Sets shift and scale to the per-channel mean and 1 / std of z [N x p].
    void fit_normalization(const Tensor& z);
    Tensor forward(const Tensor& z) const;
    Tensor forward(const Tensor& z, ProjectionCache& cache) const;
    /// Only the LoRA factors receive gradients.
    void backward(const ProjectionCache& cache, const Tensor& dfeatures);
    std::size_t in_dim() const { return weight.cols(); }
    std::size_t out_dim() const { return weight.rows(); }
};

struct StubConfig {
    std::size_t in_channels = 3;
    std::vector<std::size_t> channels{8, 16, 32};
    std::size_t feature_dim = 64;
    std::uint64_t seed = 0;
};

class FrozenBackboneStub {
public:
    explicit FrozenBackboneStub(const StubConfig& config);

    const StubConfig& config() const noexcept { return config_; }
    std::size_t embedding_dim() const noexcept { return 2 * config_.channels.back(); }
    std::size_t feature_dim() const noexcept { return config_.feature_dim; }

    /// Pooled trunk response of one slice, [M x H x W] -> [p]: the mean of
    /// every channel, then the max of every channel.
    std::vector<double> embed_slice(std::span<const double> slice, std::size_t H, std::size_t W) const;
    /// [M x S x H x W] -> [S x p].
    Tensor embed_volume(const Tensor& volume) const;
    /// [B x M x S x H x W] -> [(B*S) x p], row b*S + s holds slice s of volume b.
    Tensor embed(const Tensor& X) const;

    FeatureProjection& projection() noexcept { return projection_; }
    const FeatureProjection& projection() const noexcept { return projection_; }
    const std::vector<ConvLayer>& trunk() const noexcept { return trunk_; }
    std::size_t frozen_count() const;

private:
    StubConfig config_;
    std::vector<ConvLayer> trunk_;
    FeatureProjection projection_;
};

/// Reshape to slices and extract [(B*S) x d] projected features.
Tensor extract_slice_features(const FrozenBackboneStub& stub, const Tensor& X);

class FrozenBackboneStub3d {
public:
    explicit FrozenBackboneStub3d(const StubConfig& config);

    const StubConfig& config() const noexcept { return config_; }
    std::size_t embedding_dim() const noexcept { return 2 * config_.channels.back(); }
    std::size_t feature_dim() const noexcept { return config_.feature_dim; }

    /// [M x S x H x W] -> [1 x p], per-channel mean then max over the final grid.
    Tensor embed_volume(const Tensor& volume) const;
    /// [B x M x S x H x W] -> [B x p].
    Tensor embed(const Tensor& X) const;

    FeatureProjection& projection() noexcept { return projection_; }
    const FeatureProjection& projection() const noexcept { return projection_; }
    std::size_t frozen_count() const;

private:
    StubConfig config_;
    std::vector<ConvLayer> trunk_;
    FeatureProjection projection_;
};

}  // namespace molre
