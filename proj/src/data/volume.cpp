// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0

#include "molre/data/volume.hpp"

#include <algorithm>
#include <cmath>

#include "molre/core/errors.hpp"

namespace molre {

void VolumeSample::validate() const {
    if (voxels.rank() != 3 || voxels.size() == 0) {
        throw DataError("volume '" + sample_id + "': expected a non-empty [S x H x W] grid, got " +
                        shape_to_string(voxels.shape()));
    }
    for (double s : spacing)
        if (!(s > 0.0) || !std::isfinite(s)) throw DataError("volume '" + sample_id + "': nonpositive spacing");
    if (!voxels.all_finite()) throw DataError("volume '" + sample_id + "': non-finite voxel values");
}

double window_value(double hu, const WindowSpec& window) noexcept {
    return std::clamp((hu - window.lo) / (window.hi - window.lo), 0.0, 1.0);
}

Tensor hu_window(const VolumeSample& volume, std::span<const WindowSpec> windows) {
    if (volume.voxels.rank() != 3) throw DataError("hu_window: expected [S x H x W] voxels");
    for (const auto& w : windows)
        if (!(w.lo < w.hi)) throw ConfigError("hu_window: window lower bound must be below upper bound");
    const std::size_t n = volume.voxels.size();
    const auto& s = volume.voxels.shape();
    Tensor out({windows.size(), s[0], s[1], s[2]});
    for (std::size_t m = 0; m < windows.size(); ++m) {
        double* dst = &out[m * n];
        for (std::size_t i = 0; i < n; ++i) dst[i] = window_value(volume.voxels[i], windows[m]);
    }
    return out;
}

double trilinear(const Tensor& voxels, double z, double y, double x, double fill) noexcept {
    const auto& s = voxels.shape();
    const double zmax = static_cast<double>(s[0] - 1), ymax = static_cast<double>(s[1] - 1),
                 xmax = static_cast<double>(s[2] - 1);
    if (!(z >= 0.0 && z <= zmax && y >= 0.0 && y <= ymax && x >= 0.0 && x <= xmax)) return fill;
    const auto z0 = static_cast<std::size_t>(std::floor(z));
    const auto y0 = static_cast<std::size_t>(std::floor(y));
    const auto x0 = static_cast<std::size_t>(std::floor(x));
    const std::size_t z1 = std::min(z0 + 1, s[0] - 1), y1 = std::min(y0 + 1, s[1] - 1), x1 = std::min(x0 + 1, s[2] - 1);
    const double fz = z - static_cast<double>(z0), fy = y - static_cast<double>(y0), fx = x - static_cast<double>(x0);
    const std::size_t H = s[1], W = s[2];
    auto at = [&](std::size_t k, std::size_t j, std::size_t i) { return voxels[(k * H + j) * W + i]; };
    const double c00 = at(z0, y0, x0) * (1.0 - fx) + at(z0, y0, x1) * fx;
    const double c01 = at(z0, y1, x0) * (1.0 - fx) + at(z0, y1, x1) * fx;
    const double c10 = at(z1, y0, x0) * (1.0 - fx) + at(z1, y0, x1) * fx;
    const double c11 = at(z1, y1, x0) * (1.0 - fx) + at(z1, y1, x1) * fx;
    const double c0 = c00 * (1.0 - fy) + c01 * fy;
    const double c1 = c10 * (1.0 - fy) + c11 * fy;
    return c0 * (1.0 - fz) + c1 * fz;
}

VolumeSample resample(const VolumeSample& volume, const Spacing& target) {
    volume.validate();
    for (double t : target)
        if (!(t > 0.0)) throw DataError("resample: nonpositive target spacing");
    if (volume.spacing == target) return volume;

    // Axis order of the grid is (z, y, x); spacing is (x, y, z).
    const std::array<double, 3> src{volume.spacing[2], volume.spacing[1], volume.spacing[0]};
    const std::array<double, 3> dst{target[2], target[1], target[0]};
    std::array<std::size_t, 3> n_out{};
    std::array<double, 3> step{};
    for (std::size_t a = 0; a < 3; ++a) {
        const double extent = static_cast<double>(volume.voxels.dim(a) - 1) * src[a];
        // The epsilon absorbs rounding in extent / dst for exact multiples.
        n_out[a] = static_cast<std::size_t>(std::floor(extent / dst[a] + 1e-9)) + 1;
        step[a] = dst[a] / src[a];
    }
    VolumeSample out;
    out.voxels = Tensor({n_out[0], n_out[1], n_out[2]});
    out.spacing = target;
    out.labels = volume.labels;
    out.sample_id = volume.sample_id;
    out.stream_id = volume.stream_id;
    const std::array<double, 3> limit{static_cast<double>(volume.voxels.dim(0) - 1),
                                      static_cast<double>(volume.voxels.dim(1) - 1),
                                      static_cast<double>(volume.voxels.dim(2) - 1)};
    for (std::size_t k = 0; k < n_out[0]; ++k) {
        const double z = std::min(static_cast<double>(k) * step[0], limit[0]);
        for (std::size_t j = 0; j < n_out[1]; ++j) {
            const double y = std::min(static_cast<double>(j) * step[1], limit[1]);
            for (std::size_t i = 0; i < n_out[2]; ++i) {
                const double x = std::min(static_cast<double>(i) * step[2], limit[2]);
                out.voxels[(k * n_out[1] + j) * n_out[2] + i] = trilinear(volume.voxels, z, y, x);
            }
        }
    }
    return out;
}

Tensor preprocess(const VolumeSample& volume, std::span<const WindowSpec> windows, const Spacing& target) {
    return hu_window(resample(volume, target), windows);
}

}  // namespace molre
