// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// The four commands of the `molre` tool, callable from code.

#pragma once

#include <filesystem>
#include <optional>
#include <ostream>

#include "molre/cli/config.hpp"
#include "molre/data/dataset_io.hpp"
#include "molre/metrics/metrics.hpp"
#include "molre/pipeline/model.hpp"
#include "molre/train/trainer.hpp"

namespace molre {

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kMetricsLog = "metrics.jsonl";
inline constexpr const char* kBestCheckpoint = "best.ckpt";
inline constexpr const char* kLastCheckpoint = "last.ckpt";
inline constexpr const char* kLockFile = "train.lock";

/// Frozen-trunk embeddings of one raw volume: preprocess, then the stub.
Tensor embed_sample(const Model& model, const VolumeSample& volume);

/// Generates `config.samples` volumes into config.data_dir and writes the manifest.
Manifest cmd_synth(const RunConfig& config);

struct TrainSummary {
    int stop_epoch = 0;
    int best_epoch = 0;
    double best_auc = 0.0;
    std::vector<EpochRecord> history;  // epochs run by this invocation
};

/// Trains in config.run_dir. With `resume`, continues from that checkpoint.
/// Progress lines go to `progress` when given.
TrainSummary cmd_train(const RunConfig& config, const std::optional<std::filesystem::path>& resume = std::nullopt,
                       std::ostream* progress = nullptr);

/// Evaluates a checkpoint on one split and writes eval_<split>.tsv and
/// eval_<split>.json into `out_dir`. `data_dir` overrides the dataset
/// location recorded in the checkpoint's config.
MetricsReport cmd_eval(const std::filesystem::path& checkpoint, Split split, const std::filesystem::path& out_dir,
                       const std::optional<std::filesystem::path>& data_dir = std::nullopt);

/// Builds the configured model without training and writes its parameter table.
ParamTable cmd_count_params(const RunConfig& config, std::ostream& out);

}  // namespace molre
