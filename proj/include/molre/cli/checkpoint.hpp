// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// Sectioned binary checkpoint, all little-endian:
//
//   char[4] "MLCK", u32 version, u32 section count
//   per section: char[4] tag, u64 payload bytes, payload
//
//   CONF  run config text
//   PARM  u32 n, then n tensor blocks (trainable parameters)
//   BUFS  u32 n, then n tensor blocks (frozen data-derived buffers)
//   OPTM  f64 beta1, beta2, eps, weight_decay, lr_head, lr_adapter; u64 step;
//         u32 n, then n pairs of tensor blocks (m, v) named by parameter
//   STAT  i64 epoch; u8 stopped; f64 best_auc; i64 best_epoch,
//         epochs_since_improvement, min_epochs, patience; u64 seed
//
// Tensor block: u32 name length, name bytes, u32 rank, u64 dims[rank],
// f64 values. Unknown sections are skipped on load.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "molre/train/trainer.hpp"

namespace molre {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    std::uint32_t version = kCheckpointVersion;
    std::string config_text;
    NamedTensors params;
    NamedTensors buffers;
    OptimizerState optimizer;
    int epoch = 0;
    EarlyStopState early_stop;
    bool stopped = false;
    std::uint64_t seed = 0;
};

Checkpoint make_checkpoint(std::string config_text, const Model& model, const TrainState& state, std::uint64_t seed);

/// Loads parameters and buffers into `model` and the optimizer, epoch and early-stop state into `state`.
void restore_checkpoint(const Checkpoint& checkpoint, Model& model, TrainState& state);

/// Writes to a temporary file first and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Throws DataError on a missing or malformed file or a version mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace molre
