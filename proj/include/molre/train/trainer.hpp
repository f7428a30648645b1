// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// Epoch loop: repeat-factor resampling, shuffled minibatches, focal loss,
// gradient clipping, AdamW, validation macro AUC and early stopping.
//
// All randomness of epoch e comes from the stream (seed, "epoch", e), so a
// run restored from the state at the end of epoch e continues bit-identically.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "molre/pipeline/model.hpp"
#include "molre/train/objective.hpp"
#include "molre/train/optim.hpp"

namespace molre {

struct TrainConfig {
    std::size_t batch_size = 8;
    double lr_head = 1e-3;
    double lr_adapter = 1e-4;
    AdamWConfig adam;
    double clip_norm = 5.0;
    double rfs_threshold = 0.01;
    double gamma = 2.0;
    double alpha_min = 0.05;
    double alpha_max = 0.95;
    int min_epochs = 20;
    int patience = 5;
    int max_epochs = 100;
    std::uint64_t seed = 0;
};

/// Patience only counts non-improving epochs after min_epochs, so a flat
/// validation curve stops at exactly min_epochs + patience.
struct EarlyStopState {
    double best_auc = -std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    int epochs_since_improvement = 0;
    int min_epochs = 20;
    int patience = 5;

    /// Records the validation AUC of `epoch`; returns true on a strict improvement.
    bool update(int epoch, std::optional<double> auc);
    bool should_stop(int epoch) const noexcept {
        return epoch >= min_epochs && epochs_since_improvement >= patience;
    }
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    std::optional<double> val_auc;
    double lr_head = 0.0;
    double lr_adapter = 0.0;
    std::size_t steps = 0;
    bool improved = false;
    bool stop = false;
    int best_epoch = 0;
    double best_auc = 0.0;
};

struct TrainState {
    int epoch = 0;  // completed epochs
    OptimizerState optimizer;
    EarlyStopState early_stop;
    bool stopped = false;
};

/// Frozen-trunk embeddings of one sample, [rows_per_volume x p]. Training
/// sources receive the epoch so they can augment deterministically.
using TrainEmbeddingFn = std::function<Tensor(std::size_t sample, int epoch)>;
using EvalEmbeddingFn = std::function<Tensor(std::size_t sample)>;

struct TrainData {
    std::size_t slices = 1;
    Tensor train_labels;  // [N x C]
    TrainEmbeddingFn train;
    Tensor val_labels;    // [M x C]
    EvalEmbeddingFn val;
};

/// Probabilities [n x C] for samples 0..n-1 of `source`.
Tensor predict(const Model& model, const EvalEmbeddingFn& source, std::size_t n, std::size_t slices,
               std::size_t batch_size = 16);

NamedTensors snapshot_params(const Model& model);
/// Copies values by name; throws DataError on a missing name or shape mismatch.
void restore_params(Model& model, const NamedTensors& params);

class Trainer {
public:
    Trainer(Model& model, TrainData data, const TrainConfig& config);

    EpochRecord run_epoch();
    bool done() const noexcept;

    TrainState& state() noexcept { return state_; }
    const TrainState& state() const noexcept { return state_; }
    const TrainConfig& config() const noexcept { return config_; }
    const FocalLossConfig& loss() const noexcept { return loss_; }
    const std::vector<double>& repeat_factors() const noexcept { return factors_; }
    Model& model() noexcept { return model_; }

    double evaluate() const;

private:
    Model& model_;
    TrainData data_;
    TrainConfig config_;
    FocalLossConfig loss_;
    std::vector<double> factors_;
    TrainState state_;
};

struct TrainCallbacks {
    std::function<void(const EpochRecord&, const Trainer&)> on_epoch;
    /// Called after an improving epoch, before on_epoch.
    std::function<void(const EpochRecord&, const Trainer&)> on_best;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    int stop_epoch = 0;
    int best_epoch = 0;
    double best_auc = 0.0;
    NamedTensors best_params;
    TrainState final_state;
};

/// Runs epochs until early stopping or max_epochs, then loads the best
/// validation parameters back into `model`.
TrainResult train(Model& model, TrainData data, const TrainConfig& config, const TrainCallbacks& callbacks = {});

}  // namespace molre
