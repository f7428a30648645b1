// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0

#include "molre/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "molre/core/errors.hpp"
#include "molre/core/rng.hpp"

namespace molre {

void SynthConfig::validate() const {
    if (slices == 0 || height < 4 || width < 4) throw ConfigError("synth: volume must be at least 1 x 4 x 4");
    if (classes == 0) throw ConfigError("synth: classes must be positive");
    for (double s : spacing)
        if (!(s > 0.0)) throw ConfigError("synth: spacing must be positive");
    if (!(noise_hu >= 0.0)) throw ConfigError("synth: noise_hu must be >= 0");
    if (!prevalence.empty() && prevalence.size() != classes) {
        throw ConfigError("synth: prevalence has " + std::to_string(prevalence.size()) + " entries for " +
                          std::to_string(classes) + " classes");
    }
    for (double p : class_prevalence())
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("synth: prevalence must lie in [0, 1]");
}

std::vector<double> SynthConfig::class_prevalence() const {
    if (!prevalence.empty()) return prevalence;
    std::vector<double> out(classes, prevalence_max);
    if (classes == 1) return out;
    const double ratio = prevalence_min / prevalence_max;
    for (std::size_t c = 0; c < classes; ++c)
        out[c] = prevalence_max * std::pow(ratio, static_cast<double>(c) / static_cast<double>(classes - 1));
    return out;
}

Archetype class_archetype(std::size_t c) noexcept { return static_cast<Archetype>(c % 4); }

std::string_view archetype_name(Archetype a) noexcept {
    switch (a) {
        case Archetype::Blob: return "blob";
        case Archetype::Wedge: return "wedge";
        case Archetype::Crescent: return "crescent";
        case Archetype::Texture: return "texture";
    }
    return "unknown";
}

std::string class_name(std::size_t c) {
    return std::string(archetype_name(class_archetype(c))) + "-" + std::to_string(c / 4);
}

double band_centre(std::size_t c) noexcept {
    const double t = 0.5 + static_cast<double>(c) * 0.6180339887498949;
    return 0.15 + 0.7 * (t - std::floor(t));
}

std::string sample_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "vol-%06zu", index);
    return buf;
}

std::vector<std::uint8_t> synth_labels(const SynthConfig& config, std::uint64_t seed, std::size_t index) {
    const auto prev = config.class_prevalence();
    RngStream rng(seed, stream_key("synth-labels", index));
    std::vector<std::uint8_t> labels(config.classes);
    for (std::size_t c = 0; c < config.classes; ++c) labels[c] = rng.bernoulli(prev[c]) ? 1 : 0;
    return labels;
}

namespace {

struct Finding {
    Archetype kind{};
    double variant = 0.0;
    double z_centre = 0.0;  // slices
    double z_half = 1.0;    // slices
    double cx = 0.0, cy = 0.0;  // normalized head coordinates
    double radius = 0.0;        // normalized
    double angle = 0.0, span = 0.0;
    double hu = 0.0;
    double freq = 0.0;
};

Finding draw_finding(std::size_t c, const SynthConfig& cfg, RngStream rng) {
    Finding f;
    f.kind = class_archetype(c);
    f.variant = static_cast<double>(c / 4);
    const double S = static_cast<double>(cfg.slices);
    f.z_centre = band_centre(c) * S + rng.normal(0.0, 0.03 * S);
    f.z_half = std::max(1.0, rng.uniform(0.08, 0.14) * S);
    f.angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    switch (f.kind) {
        case Archetype::Blob: {
            const double r = 0.5 * std::sqrt(rng.uniform());
            f.cx = r * std::cos(f.angle);
            f.cy = r * std::sin(f.angle);
            f.radius = rng.uniform(0.2, 0.3);
            f.hu = 78.0 + 12.0 * f.variant;
            break;
        }
        case Archetype::Wedge:
            f.span = rng.uniform(0.6, 1.0);
            f.hu = 10.0 - 4.0 * f.variant;
            break;
        case Archetype::Crescent:
            f.span = rng.uniform(1.2, 2.0);
            f.hu = 68.0 + 10.0 * f.variant;
            break;
        case Archetype::Texture:
            f.freq = 0.7 + 0.35 * f.variant;
            f.hu = 22.0 + 6.0 * f.variant;  // amplitude
            break;
    }
    return f;
}

double wrap_angle(double a) {
    a = std::fmod(a + std::numbers::pi, 2.0 * std::numbers::pi);
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    return a - std::numbers::pi;
}

// Applies `f` at normalized in-plane position (u, v) with polar radius rho
// inside the brain (rho < 1 is the inner skull).
double apply_finding(const Finding& f, double hu, double u, double v, double rho, double i, double j) {
    switch (f.kind) {
        case Archetype::Blob: {
            const double du = (u - f.cx) / f.radius, dv = (v - f.cy) / f.radius;
            return du * du + dv * dv <= 1.0 ? f.hu : hu;
        }
        case Archetype::Wedge: {
            if (rho < 0.25 || rho > 0.85) return hu;
            return std::abs(wrap_angle(std::atan2(v, u) - f.angle)) <= 0.5 * f.span ? f.hu : hu;
        }
        case Archetype::Crescent: {
            if (rho < 0.76 || rho > 0.97) return hu;
            return std::abs(wrap_angle(std::atan2(v, u) - f.angle)) <= 0.5 * f.span ? f.hu : hu;
        }
        case Archetype::Texture:
            if (rho > 0.85) return hu;
            return hu + f.hu * std::sin(f.freq * i + f.angle) * std::sin(f.freq * j);
    }
    return hu;
}

}  // namespace

VolumeSample synth_sample(const SynthConfig& config, std::uint64_t seed, std::size_t index) {
    config.validate();
    VolumeSample out;
    out.sample_id = sample_id(index);
    out.stream_id = stream_key("augment", index);
    out.spacing = config.spacing;
    out.labels = synth_labels(config, seed, index);

    RngStream rng(seed, stream_key("synth", index));
    std::vector<Finding> findings;
    for (std::size_t c = 0; c < config.classes; ++c)
        if (out.labels[c]) findings.push_back(draw_finding(c, config, rng.split(c)));

    const std::size_t S = config.slices, H = config.height, W = config.width;
    const double cx = 0.5 * static_cast<double>(W - 1), cy = 0.5 * static_cast<double>(H - 1);
    const double head_rx = 0.44 * static_cast<double>(W), head_ry = 0.47 * static_cast<double>(H);
    const double shape_u = rng.uniform(0.95, 1.05), shape_v = rng.uniform(0.95, 1.05);
    const double brain_hu = rng.uniform(30.0, 36.0);
    const double skull = 0.9;  // inner skull as a fraction of the head radius

    out.voxels = Tensor({S, H, W});
    for (std::size_t k = 0; k < S; ++k) {
        // The head cross-section narrows towards the first and last slices.
        const double dz = (static_cast<double>(k) + 0.5 - 0.5 * static_cast<double>(S)) / (0.62 * static_cast<double>(S));
        const double section = std::sqrt(std::max(0.0, 1.0 - dz * dz));
        const double zk = static_cast<double>(k);
        for (std::size_t j = 0; j < H; ++j) {
            for (std::size_t i = 0; i < W; ++i) {
                const double x = (static_cast<double>(i) - cx) / (head_rx * shape_u * section);
                const double y = (static_cast<double>(j) - cy) / (head_ry * shape_v * section);
                const double r = std::sqrt(x * x + y * y);
                double hu = kAirHu;
                if (r <= 1.0 && section > 0.0) {
                    if (r > skull) {
                        hu = 900.0;
                    } else {
                        const double u = x / skull, v = y / skull, rho = r / skull;
                        hu = brain_hu + 4.0 * std::cos(3.0 * u) * std::cos(2.5 * v);
                        const double vu = (std::abs(u) - 0.18) / 0.1, vv = v / 0.3;
                        if (std::abs(dz) < 0.4 && vu * vu + vv * vv <= 1.0) hu = 6.0;
                        for (const auto& f : findings) {
                            if (std::abs(zk - f.z_centre) > f.z_half) continue;
                            hu = apply_finding(f, hu, u, v, rho, static_cast<double>(i), static_cast<double>(j));
                        }
                    }
                }
                if (config.noise_hu > 0.0) hu += config.noise_hu * rng.normal();
                out.voxels[(k * H + j) * W + i] = static_cast<float>(hu);
            }
        }
    }
    return out;
}

std::vector<VolumeSample> synth_dataset(std::size_t n, const SynthConfig& config, std::uint64_t seed) {
    if (n == 0) throw ConfigError("synth: sample count must be positive");
    std::vector<VolumeSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(synth_sample(config, seed, i));
    return out;
}

}  // namespace molre
