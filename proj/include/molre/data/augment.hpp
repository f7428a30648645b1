// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// Random spatial and intensity augmentation in HU space. Applied in a fixed
// order: elastic -> rotation -> scaling -> brightness -> noise -> mirroring.
// Every draw comes from the caller's stream, normally the sample's own.

#pragma once

#include <array>

#include "molre/core/rng.hpp"
#include "molre/data/volume.hpp"

namespace molre {

struct Range {
    double lo = 0.0;
    double hi = 0.0;

    double sample(RngStream& rng) const { return lo == hi ? lo : rng.uniform(lo, hi); }
};

struct AugmentConfig {
    Range elastic_alpha{0.0, 200.0};  // displacement magnitude, voxels
    Range elastic_sigma{10.0, 13.0};  // field smoothing, voxels
    Range rotation{-0.1, 0.1};        // radians, per axis
    Range scale{0.85, 1.15};          // per axis
    Range brightness{0.99, 1.01};     // multiplicative
    Range noise_variance{0.0, 0.03};  // additive Gaussian
    std::array<double, 3> mirror_probability{0.5, 0.5, 0.5};  // (x, y, z)
    double background = kAirHu;

    /// Every range collapsed to the no-op value.
    static AugmentConfig identity();
    /// Throws ConfigError on an inverted range or probability outside [0, 1].
    void validate() const;
};

VolumeSample augment(const VolumeSample& volume, const AugmentConfig& config, RngStream& rng);

/// Reverses the grid along one axis: 0 = x (W), 1 = y (H), 2 = z (S).
void mirror_axis(Tensor& voxels, int axis);

/// Separable Gaussian smoothing of a [S x H x W] field with edge clamping.
void gaussian_smooth(Tensor& field, double sigma);

}  // namespace molre
