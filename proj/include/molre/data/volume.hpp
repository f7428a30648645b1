// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// Volumes and the deterministic preprocessing applied before the backbone:
// trilinear resampling to a target spacing and HU windowing.
//
// Axis convention: voxels are [S x H x W]; spacing is (x, y, z) in mm with
// x along W, y along H and z along S.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "molre/core/tensor.hpp"

namespace molre {

using Spacing = std::array<double, 3>;  // (x, y, z) mm

inline constexpr Spacing kTargetSpacing{1.0, 1.0, 4.0};
inline constexpr double kAirHu = -1000.0;

struct VolumeSample {
    Tensor voxels;  // [S x H x W], HU
    Spacing spacing{1.0, 1.0, 4.0};
    std::vector<std::uint8_t> labels;
    std::string sample_id;
    std::uint64_t stream_id = 0;

    std::size_t slices() const { return voxels.dim(0); }
    std::size_t height() const { return voxels.dim(1); }
    std::size_t width() const { return voxels.dim(2); }
    /// Throws DataError on a non-3D grid, nonpositive spacing or non-finite voxels.
    void validate() const;
};

struct WindowSpec {
    double lo = 0.0;
    double hi = 1.0;
};

/// Brain, subdural and bone windows.
inline constexpr std::array<WindowSpec, 3> kDefaultWindows{{{0.0, 80.0}, {-20.0, 180.0}, {-800.0, 2000.0}}};

/// clamp((hu - lo) / (hi - lo), 0, 1).
double window_value(double hu, const WindowSpec& window) noexcept;

/// One channel per window: [M x S x H x W].
Tensor hu_window(const VolumeSample& volume, std::span<const WindowSpec> windows = kDefaultWindows);

/// Trilinear value at fractional voxel coordinates (z, y, x); positions
/// outside the grid return `fill`.
double trilinear(const Tensor& voxels, double z, double y, double x, double fill = kAirHu) noexcept;

/// Trilinear resampling onto `target` spacing. The output grid starts at the
/// first input voxel and keeps floor((n - 1) * src / dst) + 1 samples per axis.
VolumeSample resample(const VolumeSample& volume, const Spacing& target = kTargetSpacing);

/// resample + hu_window.
Tensor preprocess(const VolumeSample& volume, std::span<const WindowSpec> windows = kDefaultWindows,
                  const Spacing& target = kTargetSpacing);

}  // namespace molre
