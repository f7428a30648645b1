// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: a flat `key = value` text file. Every key has a default;
// unknown or repeated keys are errors. `#` starts a comment.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "molre/data/augment.hpp"
#include "molre/data/dataset_io.hpp"
#include "molre/data/synth.hpp"
#include "molre/pipeline/model.hpp"
#include "molre/train/trainer.hpp"

namespace molre {

struct RunConfig {
    std::uint64_t seed = 0;
    std::filesystem::path data_dir = "data";
    std::filesystem::path run_dir = "run";

    std::size_t samples = 2800;
    SynthConfig synth;
    SplitFractions split;
    ModelConfig model;
    TrainConfig train;
    bool augment_enabled = true;
    AugmentConfig augment;

    /// Model settings with the run seed applied to initialization and the stub.
    ModelConfig model_config() const;
    TrainConfig train_config() const;

    /// Throws ConfigError naming the first offending key.
    void validate() const;
};

struct ConfigKey {
    std::string name;
    std::string help;
};

/// All keys in file order.
const std::vector<ConfigKey>& config_keys();

/// Sets one key from its text value; throws ConfigError on an unknown key or bad value.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);
std::string get_config_value(const RunConfig& config, std::string_view key);

/// Parses `key=value` (as given to --set).
void apply_override(RunConfig& config, std::string_view assignment);

/// Parses file text over the defaults. Does not validate.
RunConfig parse_config(std::string_view text, std::string_view origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Every key with its current value; parse_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& config);

}  // namespace molre
