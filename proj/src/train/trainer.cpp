// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0

#include "molre/train/trainer.hpp"

#include <cmath>
#include <sstream>

#include "molre/core/errors.hpp"
#include "molre/core/rng.hpp"
#include "molre/metrics/metrics.hpp"
#include "molre/train/sampling.hpp"

namespace molre {

bool EarlyStopState::update(int epoch, std::optional<double> auc) {
    if (auc && *auc > best_auc) {
        best_auc = *auc;
        best_epoch = epoch;
        epochs_since_improvement = 0;
        return true;
    }
    if (epoch > min_epochs) ++epochs_since_improvement;
    return false;
}

namespace {

Tensor stack_rows(const std::vector<Tensor>& parts) {
    std::size_t rows = 0;
    const std::size_t cols = parts.front().cols();
    for (const auto& p : parts) {
        if (p.cols() != cols) throw DimensionError("stack_rows: embedding widths differ");
        rows += p.rows();
    }
    Tensor out({rows, cols});
    auto dst = out.data().begin();
    for (const auto& p : parts) dst = std::copy(p.data().begin(), p.data().end(), dst);
    return out;
}

Tensor gather_rows(const Tensor& labels, const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end) {
    const std::size_t C = labels.cols();
    Tensor out({end - begin, C});
    for (std::size_t i = begin; i < end; ++i) {
        auto src = labels.row(idx[i]);
        std::copy(src.begin(), src.end(), out.row(i - begin).begin());
    }
    return out;
}

std::string parameter_norms(Model& model) {
    std::ostringstream os;
    for (const auto& p : model.trainable_params()) os << ' ' << p.name << '=' << std::sqrt(p.tensor->squared_norm());
    return os.str();
}

}  // namespace

Tensor predict(const Model& model, const EvalEmbeddingFn& source, std::size_t n, std::size_t slices,
               std::size_t batch_size) {
    Tensor probs({n, model.classes()});
    for (std::size_t begin = 0; begin < n; begin += batch_size) {
        const std::size_t end = std::min(n, begin + batch_size);
        std::vector<Tensor> parts;
        for (std::size_t i = begin; i < end; ++i) parts.push_back(source(i));
        const Tensor p = model.forward(stack_rows(parts), slices);
        std::copy(p.data().begin(), p.data().end(), probs.row(begin).begin());
    }
    return probs;
}

NamedTensors snapshot_params(const Model& model) {
    NamedTensors out;
    for (const auto& [name, t] : model.trainable_params()) {
        Tensor copy(t->shape(), std::vector<double>(t->data().begin(), t->data().end()));
        out.emplace_back(name, std::move(copy));
    }
    return out;
}

void restore_params(Model& model, const NamedTensors& params) {
    for (auto& p : model.trainable_params()) {
        auto it = std::find_if(params.begin(), params.end(), [&](const auto& kv) { return kv.first == p.name; });
        if (it == params.end()) throw DataError("missing parameter '" + p.name + "'");
        if (it->second.shape() != p.tensor->shape()) {
            throw DataError("parameter '" + p.name + "' has shape " + shape_to_string(it->second.shape()) +
                            ", model expects " + shape_to_string(p.tensor->shape()));
        }
        std::copy(it->second.data().begin(), it->second.data().end(), p.tensor->data().begin());
    }
}

Trainer::Trainer(Model& model, TrainData data, const TrainConfig& config)
    : model_(model), data_(std::move(data)), config_(config) {
    if (config_.batch_size == 0) throw ConfigError("train: batch size must be positive");
    if (data_.train_labels.rank() != 2 || data_.train_labels.rows() == 0) {
        throw DataError("train: empty training split");
    }
    if (data_.train_labels.cols() != model_.classes()) {
        throw DataError("train: labels have " + std::to_string(data_.train_labels.cols()) +
                        " classes, model has " + std::to_string(model_.classes()));
    }
    loss_.gamma = config_.gamma;
    loss_.alpha = prevalence_weights(data_.train_labels, config_.alpha_min, config_.alpha_max);
    factors_ = molre::repeat_factors(data_.train_labels, config_.rfs_threshold);

    state_.optimizer.config = config_.adam;
    state_.optimizer.lr = {config_.lr_head, config_.lr_adapter};
    state_.early_stop.min_epochs = config_.min_epochs;
    state_.early_stop.patience = config_.patience;
}

bool Trainer::done() const noexcept { return state_.stopped || state_.epoch >= config_.max_epochs; }

double Trainer::evaluate() const {
    const std::size_t n = data_.val_labels.rank() == 2 ? data_.val_labels.rows() : 0;
    if (n == 0) throw DataError("train: empty validation split");
    const Tensor probs = predict(model_, data_.val, n, data_.slices);
    const auto m = mean_auc(probs, data_.val_labels);
    return m ? *m : std::numeric_limits<double>::quiet_NaN();
}

EpochRecord Trainer::run_epoch() {
    const int epoch = state_.epoch + 1;
    RngStream rng(config_.seed, stream_key("epoch", static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order = expand_indices(factors_, rng);
    shuffle_indices(order, rng);

    auto params = model_.trainable_params();
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config_.batch_size) {
        const std::size_t end = std::min(order.size(), begin + config_.batch_size);
        std::vector<Tensor> parts;
        parts.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) parts.push_back(data_.train(order[i], epoch));
        const Tensor Z = stack_rows(parts);
        const Tensor labels = gather_rows(data_.train_labels, order, begin, end);

        model_.zero_grad();
        ForwardCache cache;
        const Tensor probs = model_.forward(Z, data_.slices, cache);
        const double loss = focal_loss(probs, labels, loss_) + cache.aux_loss;
        if (!std::isfinite(loss)) {
            throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(steps) + "; parameter norms:" + parameter_norms(model_));
        }
        model_.backward(cache, focal_loss_logit_grad(probs, labels, loss_));
        clip_grad_norm(params, config_.clip_norm);
        adamw_step(state_.optimizer, params);
        loss_sum += loss;
        ++steps;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.steps = steps;
    rec.train_loss = steps ? loss_sum / static_cast<double>(steps) : 0.0;
    const double val = evaluate();
    if (std::isfinite(val)) rec.val_auc = val;
    rec.lr_head = state_.optimizer.lr[0];
    rec.lr_adapter = state_.optimizer.lr[1];
    rec.improved = state_.early_stop.update(epoch, rec.val_auc);
    state_.epoch = epoch;
    state_.stopped = state_.early_stop.should_stop(epoch);
    rec.stop = state_.stopped || epoch >= config_.max_epochs;
    rec.best_epoch = state_.early_stop.best_epoch;
    rec.best_auc = state_.early_stop.best_auc;
    return rec;
}

TrainResult train(Model& model, TrainData data, const TrainConfig& config, const TrainCallbacks& callbacks) {
    Trainer trainer(model, std::move(data), config);
    TrainResult result;
    result.best_params = snapshot_params(model);
    while (!trainer.done()) {
        EpochRecord rec = trainer.run_epoch();
        if (rec.improved) {
            result.best_params = snapshot_params(model);
            if (callbacks.on_best) callbacks.on_best(rec, trainer);
        }
        if (callbacks.on_epoch) callbacks.on_epoch(rec, trainer);
        result.history.push_back(rec);
    }
    result.stop_epoch = trainer.state().epoch;
    result.best_epoch = trainer.state().early_stop.best_epoch;
    result.best_auc = trainer.state().early_stop.best_auc;
    result.final_state = trainer.state();
    restore_params(model, result.best_params);
    return result;
}

}  // namespace molre
