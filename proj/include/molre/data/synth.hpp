// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic head-CT-like volumes with planted findings.
//
// Each class is an archetype (c % 4) with a class-specific intensity, size
// and preferred slice band:
//   0 hyperdense ellipsoidal blob
//   1 hypodense wedge
//   2 thin crescent along the inner skull
//   3 diffuse texture shift
// Labels are the indicators of which classes were planted. Every sample is
// generated from its own stream, so samples can be produced in any order.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "molre/data/volume.hpp"

namespace molre {

struct SynthConfig {
    std::size_t slices = 32;
    std::size_t height = 64;
    std::size_t width = 64;
    Spacing spacing = kTargetSpacing;
    std::size_t classes = 12;
    /// Per-class prevalence. Empty means a geometric profile from
    /// prevalence_max (class 0) down to prevalence_min (class C - 1).
    std::vector<double> prevalence;
    double prevalence_max = 0.3;
    double prevalence_min = 0.005;
    double noise_hu = 5.0;  // scanner noise standard deviation

    /// Throws ConfigError on empty dimensions or prevalence outside [0, 1].
    void validate() const;
    std::vector<double> class_prevalence() const;
};

enum class Archetype { Blob = 0, Wedge = 1, Crescent = 2, Texture = 3 };

Archetype class_archetype(std::size_t c) noexcept;
std::string_view archetype_name(Archetype a) noexcept;
/// e.g. "blob-0", "wedge-0", ..., "blob-1".
std::string class_name(std::size_t c);

/// Centre of class c's slice band as a fraction of the volume depth.
double band_centre(std::size_t c) noexcept;

std::string sample_id(std::size_t index);

/// Label vector of sample `index`. Cheap; the voxel generator uses the same draws.
std::vector<std::uint8_t> synth_labels(const SynthConfig& config, std::uint64_t seed, std::size_t index);

VolumeSample synth_sample(const SynthConfig& config, std::uint64_t seed, std::size_t index);

std::vector<VolumeSample> synth_dataset(std::size_t n, const SynthConfig& config, std::uint64_t seed);

}  // namespace molre
