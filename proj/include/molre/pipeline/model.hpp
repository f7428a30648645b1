// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end multi-label model.
//
// 2D path (per volume): slices -> frozen stub -> projection (+LoRA) -> MoLRE
// per slice -> attention pooling over slices -> sigmoid classifier.
// 3D path: volume -> frozen 3D stub -> pooled embedding -> MoLRE once per
// volume -> sigmoid classifier.
//
// The frozen trunk is split off as embed_volume() so callers can cache trunk
// outputs; forward()/backward() operate on those embeddings.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "molre/adapters/adapters.hpp"
#include "molre/core/param.hpp"
#include "molre/pipeline/backbone.hpp"
#include "molre/pipeline/heads.hpp"

namespace molre {

enum class Mode { BaselineFrozen, Lora, Molre, Molre3d };

std::string_view mode_name(Mode mode) noexcept;
/// Accepts "baseline-frozen", "lora", "molre", "molre3d".
Mode parse_mode(std::string_view name);

struct ModelConfig {
    Mode mode = Mode::Molre;
    StubConfig stub;
    std::size_t classes = 12;
    std::size_t lora_rank = 8;
    double lora_alpha = 16.0;
    std::size_t experts = 6;
    std::size_t expert_rank = 8;
    double expert_alpha = 16.0;  // expert scaling s = expert_alpha / expert_rank
    std::size_t router_hidden = 256;
    bool classifier_bias = true;
    double balance_weight = 0.0;
    std::uint64_t init_seed = 0;
};

struct ForwardCache {
    std::size_t slices = 0;
    ProjectionCache projection;
    Tensor features;  // projected features, [rows x d]
    MolreCache molre;
    Tensor adapted;   // after MoLRE (equal to features when absent)
    PoolCache pool;
    Tensor pooled;    // [B x d]
    Tensor logits;    // [B x C]
    Tensor probs;     // [B x C]
    double aux_loss = 0.0;
};

/// A (name, element count, trainable) row of the parameter report.
using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

struct ParamCount {
    std::string component;
    std::int64_t count = 0;
    bool trainable = false;
};

class Model {
public:
    explicit Model(const ModelConfig& config);

    const ModelConfig& config() const noexcept { return config_; }
    Mode mode() const noexcept { return config_.mode; }
    bool volumetric() const noexcept { return config_.mode == Mode::Molre3d; }
    std::size_t feature_dim() const noexcept { return config_.stub.feature_dim; }
    std::size_t embedding_dim() const noexcept { return 2 * config_.stub.channels.back(); }
    std::size_t classes() const noexcept { return config_.classes; }

    /// Frozen trunk on one preprocessed volume [M x S x H x W]:
    /// [S x p] for the 2D path, [1 x p] for the 3D path.
    Tensor embed_volume(const Tensor& volume) const;
    /// Embedding rows contributed by one volume with S slices.
    std::size_t rows_per_volume(std::size_t slices) const noexcept { return volumetric() ? 1 : slices; }

    /// Z holds B consecutive groups of rows_per_volume(S) rows. Returns probabilities [B x C].
    Tensor forward(const Tensor& Z, std::size_t slices, ForwardCache& cache) const;
    Tensor forward(const Tensor& Z, std::size_t slices) const;
    /// Accumulates gradients of all trainables given dL/dlogits. Adds the
    /// gate balance term when balance_weight > 0.
    void backward(const ForwardCache& cache, const Tensor& dlogits);

    /// Fits the frozen per-channel standardization of trunk embeddings,
    /// normally on training-split embeddings before training.
    void fit_input_normalization(const Tensor& Z);
    /// Frozen, data-derived tensors (input.shift, input.scale); empty until fitted.
    NamedTensors buffers() const;
    void set_buffers(const NamedTensors& buffers);

    std::vector<ParamRef> trainable_params();
    std::vector<std::pair<std::string, const Tensor*>> trainable_params() const;
    void zero_grad();

    std::vector<ParamCount> parameter_counts() const;

    const FrozenBackboneStub* stub2d() const noexcept { return stub2d_ ? &*stub2d_ : nullptr; }
    const FrozenBackboneStub3d* stub3d() const noexcept { return stub3d_ ? &*stub3d_ : nullptr; }
    FeatureProjection& projection();
    const FeatureProjection& projection() const;
    MolreLayer* molre() noexcept { return molre_ ? &*molre_ : nullptr; }
    const MolreLayer* molre() const noexcept { return molre_ ? &*molre_ : nullptr; }
    AttentionPooler& pooler() noexcept { return pooler_; }
    const AttentionPooler& pooler() const noexcept { return pooler_; }
    ClassifierHead& head() noexcept { return head_; }
    const ClassifierHead& head() const noexcept { return head_; }

private:
    template <typename Self, typename Fn>
    static void for_each_trainable(Self& self, Fn&& fn);

    ModelConfig config_;
    std::optional<FrozenBackboneStub> stub2d_;
    std::optional<FrozenBackboneStub3d> stub3d_;
    std::optional<MolreLayer> molre_;
    AttentionPooler pooler_;
    ClassifierHead head_;
};

/// Full forward passes over explicit components. `molre` may be null.
Tensor forward_2d(const FrozenBackboneStub& stub, const MolreLayer* molre, const AttentionPooler& pooler,
                  const ClassifierHead& head, const Tensor& X);
Tensor forward_3d(const FrozenBackboneStub3d& stub, const MolreLayer* molre, const ClassifierHead& head,
                  const Tensor& X);

}  // namespace molre
