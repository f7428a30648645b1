// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0

#include "molre/pipeline/model.hpp"

#include <cmath>

#include "molre/core/errors.hpp"
#include "molre/core/ops.hpp"
#include "molre/core/rng.hpp"

namespace molre {

std::string_view mode_name(Mode mode) noexcept {
    switch (mode) {
        case Mode::BaselineFrozen: return "baseline-frozen";
        case Mode::Lora: return "lora";
        case Mode::Molre: return "molre";
        case Mode::Molre3d: return "molre3d";
    }
    return "unknown";
}

Mode parse_mode(std::string_view name) {
    if (name == "baseline-frozen") return Mode::BaselineFrozen;
    if (name == "lora") return Mode::Lora;
    if (name == "molre") return Mode::Molre;
    if (name == "molre3d") return Mode::Molre3d;
    throw ConfigError("unknown mode '" + std::string(name) + "' (expected lora | molre | molre3d | baseline-frozen)");
}

Model::Model(const ModelConfig& config) : config_(config) {
    if (config_.classes == 0) throw ConfigError("model: number of classes must be positive");
    const std::size_t d = config_.stub.feature_dim;
    if (volumetric()) {
        stub3d_.emplace(config_.stub);
    } else {
        stub2d_.emplace(config_.stub);
    }

    RngStream rng(config_.init_seed, stream_key("model-init"));
    if (config_.mode == Mode::Lora || config_.mode == Mode::Molre) {
        auto lora = LoraAdapter::create(embedding_dim(), d, config_.lora_rank, config_.lora_alpha);
        init_lora(lora, rng);
        projection().lora = std::move(lora);
    }
    if (config_.mode == Mode::Molre || config_.mode == Mode::Molre3d) {
        if (config_.experts == 0) throw ConfigError("model: molre needs K >= 1");
        auto layer = MolreLayer::create(d, d, config_.experts, config_.expert_rank, config_.router_hidden,
                                        config_.expert_alpha / static_cast<double>(config_.expert_rank));
        init_adapter_params(layer.bank, layer.router, rng);
        molre_ = std::move(layer);
    }
    if (!volumetric()) pooler_ = AttentionPooler::create(d);
    head_ = ClassifierHead::create(d, config_.classes, config_.classifier_bias);
    const double sd = 1.0 / std::sqrt(static_cast<double>(d));
    for (double& v : head_.W.data()) v = sd * rng.normal();
}

FeatureProjection& Model::projection() { return stub2d_ ? stub2d_->projection() : stub3d_->projection(); }

const FeatureProjection& Model::projection() const {
    return stub2d_ ? stub2d_->projection() : stub3d_->projection();
}

Tensor Model::embed_volume(const Tensor& volume) const {
    return stub2d_ ? stub2d_->embed_volume(volume) : stub3d_->embed_volume(volume);
}

void Model::fit_input_normalization(const Tensor& Z) { projection().fit_normalization(Z); }

NamedTensors Model::buffers() const {
    NamedTensors out;
    const auto& proj = projection();
    if (!proj.shift.empty()) {
        out.emplace_back("input.shift", proj.shift);
        out.emplace_back("input.scale", proj.scale);
    }
    return out;
}

void Model::set_buffers(const NamedTensors& buffers) {
    auto& proj = projection();
    proj.shift = Tensor();
    proj.scale = Tensor();
    for (const auto& [name, t] : buffers) {
        if (name != "input.shift" && name != "input.scale") throw DataError("unknown model buffer '" + name + "'");
        if (t.shape() != Shape{embedding_dim()}) {
            throw DataError("buffer '" + name + "' has shape " + shape_to_string(t.shape()) + ", model expects [" +
                            std::to_string(embedding_dim()) + "]");
        }
        (name == "input.shift" ? proj.shift : proj.scale) = t;
    }
    if (proj.shift.empty() != proj.scale.empty()) throw DataError("input.shift and input.scale must be given together");
}

Tensor Model::forward(const Tensor& Z, std::size_t slices) const {
    ForwardCache cache;
    return forward(Z, slices, cache);
}

Tensor Model::forward(const Tensor& Z, std::size_t slices, ForwardCache& cache) const {
    const std::size_t per_volume = rows_per_volume(slices);
    if (Z.rank() != 2 || Z.cols() != embedding_dim() || per_volume == 0 || Z.rows() % per_volume != 0 ||
        Z.rows() == 0) {
        throw DimensionError("model forward: embeddings " + shape_to_string(Z.shape()) +
                             " are not whole volumes of " + std::to_string(per_volume) + " rows x " +
                             std::to_string(embedding_dim()));
    }
    cache.slices = slices;
    cache.features = projection().forward(Z, cache.projection);
    if (molre_) {
        cache.adapted = molre_forward(*molre_, cache.features, cache.molre);
        cache.aux_loss = config_.balance_weight > 0.0
                             ? config_.balance_weight * gate_balance_penalty(cache.molre.route.gates)
                             : 0.0;
    } else {
        cache.adapted = cache.features;
        cache.aux_loss = 0.0;
    }
    if (volumetric()) {
        cache.pooled = cache.adapted;
    } else {
        cache.pooled = attention_pool(pooler_, cache.adapted, slices, cache.pool);
    }
    cache.logits = classifier_logits(head_, cache.pooled);
    cache.probs = sigmoid(cache.logits);
    return cache.probs;
}

void Model::backward(const ForwardCache& cache, const Tensor& dlogits) {
    const Tensor dpooled = classifier_backward(head_, cache.pooled, dlogits);
    const Tensor dadapted =
        volumetric() ? dpooled : attention_pool_backward(pooler_, cache.adapted, cache.slices, cache.pool, dpooled);
    Tensor dfeatures;
    if (molre_) {
        std::optional<Tensor> dgates;
        if (config_.balance_weight > 0.0) {
            dgates = gate_balance_grad(cache.molre.route.gates);
            for (double& v : dgates->data()) v *= config_.balance_weight;
        }
        dfeatures = molre_backward(*molre_, cache.features, cache.molre, dadapted, dgates ? &*dgates : nullptr);
    } else {
        dfeatures = dadapted;
    }
    projection().backward(cache.projection, dfeatures);
}

template <typename Self, typename Fn>
void Model::for_each_trainable(Self& self, Fn&& fn) {
    auto& lora = self.projection().lora;
    if (lora) {
        fn("lora.A", lora->A, ParamGroup::Adapter);
        fn("lora.B", lora->B, ParamGroup::Adapter);
    }
    if (self.molre_) {
        auto& layer = *self.molre_;
        for (std::size_t i = 0; i < layer.bank.experts.size(); ++i) {
            const std::string prefix = "molre.expert" + std::to_string(i);
            fn(prefix + ".A", layer.bank.experts[i].A, ParamGroup::Adapter);
            fn(prefix + ".B", layer.bank.experts[i].B, ParamGroup::Adapter);
        }
        fn("router.W1", layer.router.W1, ParamGroup::Adapter);
        fn("router.b1", layer.router.b1, ParamGroup::Adapter);
        fn("router.W2", layer.router.W2, ParamGroup::Adapter);
        fn("router.b2", layer.router.b2, ParamGroup::Adapter);
    }
    if (!self.volumetric()) fn("pooler.q", self.pooler_.q, ParamGroup::Head);
    fn("head.W", self.head_.W, ParamGroup::Head);
    if (self.head_.use_bias) fn("head.bias", self.head_.bias, ParamGroup::Head);
}

std::vector<ParamRef> Model::trainable_params() {
    std::vector<ParamRef> out;
    for_each_trainable(*this, [&](std::string name, Tensor& t, ParamGroup g) {
        out.push_back({std::move(name), &t, g});
    });
    return out;
}

std::vector<std::pair<std::string, const Tensor*>> Model::trainable_params() const {
    std::vector<std::pair<std::string, const Tensor*>> out;
    for_each_trainable(*this, [&](std::string name, const Tensor& t, ParamGroup) { out.emplace_back(std::move(name), &t); });
    return out;
}

void Model::zero_grad() {
    for (auto& p : trainable_params()) p.tensor->zero_grad();
}

std::vector<ParamCount> Model::parameter_counts() const {
    std::vector<ParamCount> rows;
    const std::int64_t frozen = static_cast<std::int64_t>(stub2d_ ? stub2d_->frozen_count() : stub3d_->frozen_count());
    rows.push_back({"backbone (frozen)", frozen, false});
    const auto& lora = projection().lora;
    rows.push_back({"lora", lora ? static_cast<std::int64_t>(lora->parameter_count()) : 0, true});
    std::int64_t experts = 0, router = 0;
    if (molre_) {
        for (const auto& e : molre_->bank.experts) experts += static_cast<std::int64_t>(e.A.size() + e.B.size());
        router = static_cast<std::int64_t>(molre_->router.W1.size() + molre_->router.b1.size() +
                                           molre_->router.W2.size() + molre_->router.b2.size());
    }
    rows.push_back({"molre experts", experts, true});
    rows.push_back({"router", router, true});
    rows.push_back({"pooler query", volumetric() ? 0 : static_cast<std::int64_t>(pooler_.q.size()), true});
    rows.push_back({"classifier head", static_cast<std::int64_t>(head_.parameter_count()), true});
    return rows;
}

// ---------------------------------------------------------------------------

Tensor forward_2d(const FrozenBackboneStub& stub, const MolreLayer* molre, const AttentionPooler& pooler,
                  const ClassifierHead& head, const Tensor& X) {
    const Tensor features = extract_slice_features(stub, X);
    const Tensor adapted = molre ? molre_forward(*molre, features) : features;
    const std::size_t B = X.dim(0), S = X.dim(2);
    const Tensor pooled = attention_pool(pooler, adapted.reshaped({B, S, adapted.cols()}));
    return classify(head, pooled);
}

Tensor forward_3d(const FrozenBackboneStub3d& stub, const MolreLayer* molre, const ClassifierHead& head,
                  const Tensor& X) {
    const Tensor features = stub.projection().forward(stub.embed(X));
    const Tensor adapted = molre ? molre_forward(*molre, features) : features;
    return classify(head, adapted);
}

}  // namespace molre
