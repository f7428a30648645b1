// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0

#include "molre/data/augment.hpp"

#include <cmath>
#include <vector>

#include "molre/core/errors.hpp"

namespace molre {

AugmentConfig AugmentConfig::identity() {
    AugmentConfig c;
    c.elastic_alpha = {0.0, 0.0};
    c.elastic_sigma = {10.0, 10.0};
    c.rotation = {0.0, 0.0};
    c.scale = {1.0, 1.0};
    c.brightness = {1.0, 1.0};
    c.noise_variance = {0.0, 0.0};
    c.mirror_probability = {0.0, 0.0, 0.0};
    return c;
}

void AugmentConfig::validate() const {
    const std::array<std::pair<const char*, Range>, 6> ranges{{{"elastic_alpha", elastic_alpha},
                                                               {"elastic_sigma", elastic_sigma},
                                                               {"rotation", rotation},
                                                               {"scale", scale},
                                                               {"brightness", brightness},
                                                               {"noise_variance", noise_variance}}};
    for (const auto& [name, r] : ranges) {
        if (!(r.lo <= r.hi)) throw ConfigError(std::string("augment.") + name + ": low bound exceeds high bound");
    }
    if (elastic_alpha.lo < 0.0 || elastic_sigma.lo <= 0.0 || scale.lo <= 0.0 || noise_variance.lo < 0.0) {
        throw ConfigError("augment: elastic alpha, noise variance must be >= 0 and sigma, scale > 0");
    }
    for (double p : mirror_probability)
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("augment.mirror_probability must lie in [0, 1]");
}

void mirror_axis(Tensor& voxels, int axis) {
    const std::size_t S = voxels.dim(0), H = voxels.dim(1), W = voxels.dim(2);
    auto idx = [&](std::size_t k, std::size_t j, std::size_t i) { return (k * H + j) * W + i; };
    switch (axis) {
        case 0:
            for (std::size_t k = 0; k < S; ++k)
                for (std::size_t j = 0; j < H; ++j)
                    for (std::size_t i = 0; i < W / 2; ++i) std::swap(voxels[idx(k, j, i)], voxels[idx(k, j, W - 1 - i)]);
            break;
        case 1:
            for (std::size_t k = 0; k < S; ++k)
                for (std::size_t j = 0; j < H / 2; ++j)
                    for (std::size_t i = 0; i < W; ++i) std::swap(voxels[idx(k, j, i)], voxels[idx(k, H - 1 - j, i)]);
            break;
        case 2:
            for (std::size_t k = 0; k < S / 2; ++k)
                for (std::size_t j = 0; j < H; ++j)
                    for (std::size_t i = 0; i < W; ++i) std::swap(voxels[idx(k, j, i)], voxels[idx(S - 1 - k, j, i)]);
            break;
        default: throw ConfigError("mirror_axis: axis must be 0, 1 or 2");
    }
}

void gaussian_smooth(Tensor& field, double sigma) {
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
        const double w = std::exp(-0.5 * static_cast<double>(t * t) / (sigma * sigma));
        kernel[static_cast<std::size_t>(t + radius)] = w;
        total += w;
    }
    for (double& w : kernel) w /= total;

    const std::array<std::size_t, 3> dims{field.dim(0), field.dim(1), field.dim(2)};
    const std::array<std::size_t, 3> stride{dims[1] * dims[2], dims[2], 1};
    std::vector<double> line, smoothed;
    for (std::size_t axis = 0; axis < 3; ++axis) {
        const std::size_t n = dims[axis];
        line.resize(n);
        smoothed.resize(n);
        const std::size_t a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
        for (std::size_t u = 0; u < dims[a1]; ++u) {
            for (std::size_t v = 0; v < dims[a2]; ++v) {
                const std::size_t base = u * stride[a1] + v * stride[a2];
                for (std::size_t i = 0; i < n; ++i) line[i] = field[base + i * stride[axis]];
                for (std::size_t i = 0; i < n; ++i) {
                    double s = 0.0;
                    for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
                        const std::ptrdiff_t j =
                            std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(i) + t, 0,
                                                       static_cast<std::ptrdiff_t>(n) - 1);
                        s += kernel[static_cast<std::size_t>(t + radius)] * line[static_cast<std::size_t>(j)];
                    }
                    smoothed[i] = s;
                }
                for (std::size_t i = 0; i < n; ++i) field[base + i * stride[axis]] = smoothed[i];
            }
        }
    }
}

namespace {

Tensor elastic_warp(const Tensor& voxels, double alpha, double sigma, double fill, RngStream& rng) {
    const auto& s = voxels.shape();
    std::array<Tensor, 3> disp{Tensor(s), Tensor(s), Tensor(s)};
    for (auto& f : disp) {
        for (double& v : f.data()) v = rng.uniform(-1.0, 1.0);
        gaussian_smooth(f, sigma);
    }
    Tensor out(s);
    for (std::size_t k = 0; k < s[0]; ++k)
        for (std::size_t j = 0; j < s[1]; ++j)
            for (std::size_t i = 0; i < s[2]; ++i) {
                const std::size_t n = (k * s[1] + j) * s[2] + i;
                out[n] = trilinear(voxels, static_cast<double>(k) + alpha * disp[0][n],
                                   static_cast<double>(j) + alpha * disp[1][n],
                                   static_cast<double>(i) + alpha * disp[2][n], fill);
            }
    return out;
}

// Output at physical offset p from the centre samples the input at R^T (p / scale).
Tensor affine_warp(const Tensor& voxels, const Spacing& spacing, const std::array<double, 3>& angles,
                   const std::array<double, 3>& scale, double fill) {
    const auto rot = [](int axis, double t) {
        const double c = std::cos(t), s = std::sin(t);
        std::array<std::array<double, 3>, 3> m{};
        const int a = (axis + 1) % 3, b = (axis + 2) % 3;
        m[axis][axis] = 1.0;
        m[a][a] = c;
        m[a][b] = -s;
        m[b][a] = s;
        m[b][b] = c;
        return m;
    };
    const auto mul = [](const auto& A, const auto& B) {
        std::array<std::array<double, 3>, 3> C{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) C[i][j] += A[i][k] * B[k][j];
        return C;
    };
    // R = Rz Ry Rx in (x, y, z) physical coordinates.
    const auto R = mul(rot(2, angles[2]), mul(rot(1, angles[1]), rot(0, angles[0])));

    const auto& s = voxels.shape();
    const std::array<double, 3> centre{0.5 * static_cast<double>(s[2] - 1), 0.5 * static_cast<double>(s[1] - 1),
                                       0.5 * static_cast<double>(s[0] - 1)};
    Tensor out(s);
    for (std::size_t k = 0; k < s[0]; ++k)
        for (std::size_t j = 0; j < s[1]; ++j)
            for (std::size_t i = 0; i < s[2]; ++i) {
                const std::array<double, 3> p{(static_cast<double>(i) - centre[0]) * spacing[0] / scale[0],
                                              (static_cast<double>(j) - centre[1]) * spacing[1] / scale[1],
                                              (static_cast<double>(k) - centre[2]) * spacing[2] / scale[2]};
                std::array<double, 3> q{};
                for (int a = 0; a < 3; ++a) q[a] = R[0][a] * p[0] + R[1][a] * p[1] + R[2][a] * p[2];
                out[(k * s[1] + j) * s[2] + i] =
                    trilinear(voxels, q[2] / spacing[2] + centre[2], q[1] / spacing[1] + centre[1],
                              q[0] / spacing[0] + centre[0], fill);
            }
    return out;
}

}  // namespace

VolumeSample augment(const VolumeSample& volume, const AugmentConfig& config, RngStream& rng) {
    config.validate();
    volume.validate();
    VolumeSample out = volume;

    const double alpha = config.elastic_alpha.sample(rng);
    const double sigma = config.elastic_sigma.sample(rng);
    if (alpha != 0.0) out.voxels = elastic_warp(out.voxels, alpha, sigma, config.background, rng);

    const std::array<double, 3> angles{config.rotation.sample(rng), config.rotation.sample(rng),
                                       config.rotation.sample(rng)};
    const std::array<double, 3> scale{config.scale.sample(rng), config.scale.sample(rng), config.scale.sample(rng)};
    const bool spatial = angles != std::array<double, 3>{0.0, 0.0, 0.0} || scale != std::array<double, 3>{1.0, 1.0, 1.0};
    if (spatial) out.voxels = affine_warp(out.voxels, out.spacing, angles, scale, config.background);

    const double m = config.brightness.sample(rng);
    for (double& v : out.voxels.data()) v *= m;

    const double variance = config.noise_variance.sample(rng);
    if (variance > 0.0) {
        const double sd = std::sqrt(variance);
        for (double& v : out.voxels.data()) v += sd * rng.normal();
    }

    for (int axis = 0; axis < 3; ++axis)
        if (rng.bernoulli(config.mirror_probability[static_cast<std::size_t>(axis)])) mirror_axis(out.voxels, axis);
    return out;
}

}  // namespace molre
