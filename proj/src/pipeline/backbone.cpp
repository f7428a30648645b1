// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0

#include "molre/pipeline/backbone.hpp"

#include <cmath>
#include <string>

#include "molre/core/errors.hpp"
#include "molre/core/ops.hpp"
#include "molre/core/rng.hpp"

namespace molre {

namespace {

constexpr std::size_t kKernel = 3;
constexpr std::size_t kStride = 2;
constexpr double kScaleFloor = 1e-8;

std::size_t conv_out(std::size_t n) { return (n + 1) / kStride; }  // pad 1, k 3, stride 2

void fill_he(Tensor& w, std::size_t fan_in, RngStream& rng) {
    const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : w.data()) v = sd * rng.normal();
}

FeatureProjection make_projection(std::size_t p, std::size_t d, RngStream& rng) {
    FeatureProjection proj;
    proj.weight = Tensor({d, p});
    const double sd = std::sqrt(1.0 / static_cast<double>(p));
    for (double& v : proj.weight.data()) v = sd * rng.normal();
    return proj;
}

// Mean then max of each channel over the final grid.
void pool_channels(const std::vector<double>& act, std::size_t c, std::size_t n, std::span<double> out) {
    for (std::size_t ch = 0; ch < c; ++ch) {
        double s = 0.0, mx = act[ch * n];
        for (std::size_t i = 0; i < n; ++i) {
            s += act[ch * n + i];
            mx = std::max(mx, act[ch * n + i]);
        }
        out[ch] = s / static_cast<double>(n);
        out[c + ch] = mx;
    }
}

void validate_config(const StubConfig& c) {
    if (c.in_channels == 0 || c.feature_dim == 0 || c.channels.empty()) {
        throw ConfigError("backbone stub: channels and feature dimension must be positive");
    }
    for (std::size_t ch : c.channels)
        if (ch == 0) throw ConfigError("backbone stub: zero-width conv layer");
}

// [Cin x H x W] -> [Cout x H' x W'], ReLU applied.
std::vector<double> conv2d_relu(const std::vector<double>& in, std::size_t cin, std::size_t H, std::size_t W,
                                const ConvLayer& layer) {
    const std::size_t cout = layer.bias.size();
    const std::size_t Ho = conv_out(H), Wo = conv_out(W);
    std::vector<double> out(cout * Ho * Wo);
    for (std::size_t co = 0; co < cout; ++co) {
        double* o = &out[co * Ho * Wo];
        std::fill(o, o + Ho * Wo, layer.bias[co]);
        for (std::size_t ci = 0; ci < cin; ++ci) {
            const double* src = &in[ci * H * W];
            for (std::size_t ky = 0; ky < kKernel; ++ky) {
                for (std::size_t kx = 0; kx < kKernel; ++kx) {
                    const double w = layer.weight[((co * cin + ci) * kKernel + ky) * kKernel + kx];
                    for (std::size_t oy = 0; oy < Ho; ++oy) {
                        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * kStride + ky) - 1;
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
                        const double* srow = src + iy * W;
                        double* orow = o + oy * Wo;
                        for (std::size_t ox = 0; ox < Wo; ++ox) {
                            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * kStride + kx) - 1;
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
                            orow[ox] += w * srow[ix];
                        }
                    }
                }
            }
        }
        for (std::size_t i = 0; i < Ho * Wo; ++i) o[i] = o[i] > 0.0 ? o[i] : 0.0;
    }
    return out;
}

// [Cin x D x H x W] -> [Cout x D' x H' x W'], ReLU applied.
std::vector<double> conv3d_relu(const std::vector<double>& in, std::size_t cin, std::size_t D, std::size_t H,
                                std::size_t W, const ConvLayer& layer) {
    const std::size_t cout = layer.bias.size();
    const std::size_t Do = conv_out(D), Ho = conv_out(H), Wo = conv_out(W);
    const std::size_t plane = Ho * Wo;
    std::vector<double> out(cout * Do * plane);
    for (std::size_t co = 0; co < cout; ++co) {
        double* o = &out[co * Do * plane];
        std::fill(o, o + Do * plane, layer.bias[co]);
        for (std::size_t ci = 0; ci < cin; ++ci) {
            const double* src = &in[ci * D * H * W];
            for (std::size_t kz = 0; kz < kKernel; ++kz) {
                for (std::size_t ky = 0; ky < kKernel; ++ky) {
                    for (std::size_t kx = 0; kx < kKernel; ++kx) {
                        const double w =
                            layer.weight[(((co * cin + ci) * kKernel + kz) * kKernel + ky) * kKernel + kx];
                        for (std::size_t oz = 0; oz < Do; ++oz) {
                            const std::ptrdiff_t iz = static_cast<std::ptrdiff_t>(oz * kStride + kz) - 1;
                            if (iz < 0 || iz >= static_cast<std::ptrdiff_t>(D)) continue;
                            for (std::size_t oy = 0; oy < Ho; ++oy) {
                                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * kStride + ky) - 1;
                                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
                                const double* srow = src + (iz * H + iy) * W;
                                double* orow = o + oz * plane + oy * Wo;
                                for (std::size_t ox = 0; ox < Wo; ++ox) {
                                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * kStride + kx) - 1;
                                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
                                    orow[ox] += w * srow[ix];
                                }
                            }
                        }
                    }
                }
            }
        }
        for (std::size_t i = 0; i < Do * plane; ++i) o[i] = o[i] > 0.0 ? o[i] : 0.0;
    }
    return out;
}

void require_volume(const Tensor& v, std::size_t channels, const char* op) {
    if (v.rank() != 4 || v.dim(0) != channels) {
        throw DimensionError(std::string(op) + ": expected [" + std::to_string(channels) +
                             " x S x H x W] volume, got " + shape_to_string(v.shape()));
    }
    for (std::size_t a = 1; a < 4; ++a)
        if (v.dim(a) == 0) throw DimensionError(std::string(op) + ": empty volume " + shape_to_string(v.shape()));
}

void require_batch(const Tensor& X, std::size_t channels, const char* op) {
    if (X.rank() != 5 || X.dim(1) != channels) {
        throw DimensionError(std::string(op) + ": expected [B x " + std::to_string(channels) +
                             " x S x H x W] input, got " + shape_to_string(X.shape()));
    }
    for (std::size_t a = 0; a < 5; ++a)
        if (X.dim(a) == 0) throw DimensionError(std::string(op) + ": empty input " + shape_to_string(X.shape()));
}

Tensor volume_of_batch(const Tensor& X, std::size_t b) {
    const Shape vshape{X.dim(1), X.dim(2), X.dim(3), X.dim(4)};
    const std::size_t n = shape_numel(vshape);
    auto src = X.data().subspan(b * n, n);
    return Tensor(vshape, std::vector<double>(src.begin(), src.end()));
}

}  // namespace

// ---------------------------------------------------------------------------

Tensor FeatureProjection::normalize(const Tensor& z) const {
    if (shift.empty()) return z;
    if (z.rank() != 2 || z.cols() != shift.size()) {
        throw DimensionError("projection: embeddings " + shape_to_string(z.shape()) + " do not match " +
                             std::to_string(shift.size()) + " normalization channels");
    }
    Tensor out = z;
    const std::size_t p = z.cols();
    for (std::size_t r = 0; r < z.rows(); ++r)
        for (std::size_t c = 0; c < p; ++c) out.at(r, c) = (z.at(r, c) - shift[c]) * scale[c];
    return out;
}

void FeatureProjection::fit_normalization(const Tensor& z) {
    if (z.rank() != 2 || z.rows() == 0 || z.cols() != in_dim()) {
        throw DimensionError("fit_normalization: expected [N x " + std::to_string(in_dim()) + "] embeddings, got " +
                             shape_to_string(z.shape()));
    }
    const std::size_t N = z.rows(), p = z.cols();
    shift = Tensor({p});
    scale = Tensor({p});
    for (std::size_t c = 0; c < p; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < N; ++r) mean += z.at(r, c);
        mean /= static_cast<double>(N);
        double var = 0.0;
        for (std::size_t r = 0; r < N; ++r) var += (z.at(r, c) - mean) * (z.at(r, c) - mean);
        shift[c] = mean;
        scale[c] = 1.0 / std::max(std::sqrt(var / static_cast<double>(N)), kScaleFloor);
    }
}

Tensor FeatureProjection::forward(const Tensor& z) const {
    ProjectionCache cache;
    return forward(z, cache);
}

Tensor FeatureProjection::forward(const Tensor& z, ProjectionCache& cache) const {
    cache.input = normalize(z);
    const Tensor pre = lora ? lora_forward(*lora, weight, cache.input) : matmul_nt(cache.input, weight);
    cache.features = tanh(pre);
    return cache.features;
}

void FeatureProjection::backward(const ProjectionCache& cache, const Tensor& dfeatures) {
    if (!lora) return;
    lora_backward(*lora, weight, cache.input, tanh_backward(cache.features, dfeatures));
}

// ---------------------------------------------------------------------------

FrozenBackboneStub::FrozenBackboneStub(const StubConfig& config) : config_(config) {
    validate_config(config_);
    RngStream rng(config_.seed, stream_key("backbone2d"));
    std::size_t cin = config_.in_channels;
    for (std::size_t cout : config_.channels) {
        ConvLayer layer{Tensor({cout, cin, kKernel, kKernel}), Tensor({cout})};
        fill_he(layer.weight, cin * kKernel * kKernel, rng);
        trunk_.push_back(std::move(layer));
        cin = cout;
    }
    projection_ = make_projection(embedding_dim(), config_.feature_dim, rng);
}

std::size_t FrozenBackboneStub::frozen_count() const {
    std::size_t n = projection_.weight.size();
    for (const auto& l : trunk_) n += l.weight.size() + l.bias.size();
    return n;
}

std::vector<double> FrozenBackboneStub::embed_slice(std::span<const double> slice, std::size_t H,
                                                    std::size_t W) const {
    if (slice.size() != config_.in_channels * H * W) {
        throw DimensionError("embed_slice: expected " + std::to_string(config_.in_channels) + " x " +
                             std::to_string(H) + " x " + std::to_string(W) + " values");
    }
    std::vector<double> act(slice.begin(), slice.end());
    std::size_t c = config_.in_channels, h = H, w = W;
    for (const auto& layer : trunk_) {
        act = conv2d_relu(act, c, h, w, layer);
        c = layer.bias.size();
        h = conv_out(h);
        w = conv_out(w);
    }
    std::vector<double> pooled(2 * c);
    pool_channels(act, c, h * w, pooled);
    return pooled;
}

Tensor FrozenBackboneStub::embed_volume(const Tensor& volume) const {
    require_volume(volume, config_.in_channels, "embed_volume");
    const std::size_t M = volume.dim(0), S = volume.dim(1), H = volume.dim(2), W = volume.dim(3);
    const std::size_t p = embedding_dim();
    Tensor Z({S, p});
    std::vector<double> slice(M * H * W);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t m = 0; m < M; ++m) {
            auto src = volume.data().subspan(((m * S) + s) * H * W, H * W);
            std::copy(src.begin(), src.end(), slice.begin() + static_cast<std::ptrdiff_t>(m * H * W));
        }
        const auto z = embed_slice(slice, H, W);
        std::copy(z.begin(), z.end(), Z.row(s).begin());
    }
    return Z;
}

Tensor FrozenBackboneStub::embed(const Tensor& X) const {
    require_batch(X, config_.in_channels, "extract_slice_features");
    const std::size_t B = X.dim(0), S = X.dim(2), p = embedding_dim();
    Tensor Z({B * S, p});
    for (std::size_t b = 0; b < B; ++b) {
        const Tensor zb = embed_volume(volume_of_batch(X, b));
        std::copy(zb.data().begin(), zb.data().end(), Z.data().begin() + static_cast<std::ptrdiff_t>(b * S * p));
    }
    return Z;
}

Tensor extract_slice_features(const FrozenBackboneStub& stub, const Tensor& X) {
    return stub.projection().forward(stub.embed(X));
}

// ---------------------------------------------------------------------------

FrozenBackboneStub3d::FrozenBackboneStub3d(const StubConfig& config) : config_(config) {
    validate_config(config_);
    RngStream rng(config_.seed, stream_key("backbone3d"));
    std::size_t cin = config_.in_channels;
    for (std::size_t cout : config_.channels) {
        ConvLayer layer{Tensor({cout, cin, kKernel, kKernel, kKernel}), Tensor({cout})};
        fill_he(layer.weight, cin * kKernel * kKernel * kKernel, rng);
        trunk_.push_back(std::move(layer));
        cin = cout;
    }
    projection_ = make_projection(embedding_dim(), config_.feature_dim, rng);
}

std::size_t FrozenBackboneStub3d::frozen_count() const {
    std::size_t n = projection_.weight.size();
    for (const auto& l : trunk_) n += l.weight.size() + l.bias.size();
    return n;
}

Tensor FrozenBackboneStub3d::embed_volume(const Tensor& volume) const {
    require_volume(volume, config_.in_channels, "stub3d");
    std::vector<double> act(volume.data().begin(), volume.data().end());
    std::size_t c = volume.dim(0), D = volume.dim(1), H = volume.dim(2), W = volume.dim(3);
    for (const auto& layer : trunk_) {
        act = conv3d_relu(act, c, D, H, W, layer);
        c = layer.bias.size();
        D = conv_out(D);
        H = conv_out(H);
        W = conv_out(W);
    }
    Tensor z({1, 2 * c});
    pool_channels(act, c, D * H * W, z.data());
    return z;
}

Tensor FrozenBackboneStub3d::embed(const Tensor& X) const {
    require_batch(X, config_.in_channels, "stub3d");
    const std::size_t B = X.dim(0), p = embedding_dim();
    Tensor Z({B, p});
    for (std::size_t b = 0; b < B; ++b) {
        const Tensor zb = embed_volume(volume_of_batch(X, b));
        std::copy(zb.data().begin(), zb.data().end(), Z.row(b).begin());
    }
    return Z;
}

}  // namespace molre
