// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0

#include "molre/adapters/adapters.hpp"

#include <cmath>
#include <string>

#include "molre/core/errors.hpp"
#include "molre/core/ops.hpp"

namespace molre {

namespace {

void require_cols(const Tensor& x, std::size_t d, const char* op) {
    if (x.rank() != 2 || x.cols() != d) {
        throw DimensionError(std::string(op) + ": expected input with " + std::to_string(d) + " columns, got " +
                             shape_to_string(x.shape()));
    }
}

void fill_gaussian(Tensor& t, RngStream& rng, double variance) {
    const double sd = std::sqrt(variance);
    for (double& v : t.data()) v = sd * rng.normal();
}

// Row-wise scale: out[n, :] = w[n] * t[n, :].
Tensor scale_rows(const Tensor& t, const Tensor& weights, std::size_t column) {
    Tensor out(t.shape());
    const std::size_t stride = weights.cols();
    for (std::size_t n = 0; n < t.rows(); ++n) {
        const double w = weights[n * stride + column];
        auto src = t.row(n);
        auto dst = out.row(n);
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] = w * src[j];
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// LoRA

LoraAdapter LoraAdapter::create(std::size_t d, std::size_t d_out, std::size_t rank, double alpha) {
    if (rank == 0 || d == 0 || d_out == 0) throw ConfigError("lora: dimensions and rank must be positive");
    if (rank > std::min(d, d_out)) {
        throw ConfigError("lora: rank " + std::to_string(rank) + " exceeds min(d, d_out) = " +
                          std::to_string(std::min(d, d_out)));
    }
    if (!(alpha > 0.0)) throw ConfigError("lora: alpha must be positive");
    return LoraAdapter{Tensor({rank, d}), Tensor({d_out, rank}), rank, alpha};
}

void init_lora(LoraAdapter& adapter, RngStream& rng) {
    fill_gaussian(adapter.A, rng, 1.0 / static_cast<double>(adapter.in_dim()));
    adapter.B.fill(0.0);
}

Tensor lora_forward(const LoraAdapter& adapter, const Tensor& W0, const Tensor& x) {
    require_cols(x, W0.cols(), "lora_forward");
    if (adapter.in_dim() != W0.cols() || adapter.out_dim() != W0.rows()) {
        throw DimensionError("lora_forward: adapter " + shape_to_string(adapter.B.shape()) + "*" +
                             shape_to_string(adapter.A.shape()) + " does not match W0 " +
                             shape_to_string(W0.shape()));
    }
    Tensor h = matmul_nt(x, W0);
    add_scaled(h, matmul_nt(matmul_nt(x, adapter.A), adapter.B), adapter.scaling());
    return h;
}

Tensor lora_backward(LoraAdapter& adapter, const Tensor& W0, const Tensor& x, const Tensor& dh) {
    const double s = adapter.scaling();
    const Tensor ax = matmul_nt(x, adapter.A);        // [N x r]
    const Tensor dax = matmul(dh, adapter.B);          // [N x r], unscaled
    accumulate(adapter.B.grad(), matmul_tn(dh, ax).data(), s);
    accumulate(adapter.A.grad(), matmul_tn(dax, x).data(), s);
    Tensor dx = matmul(dh, W0);
    add_scaled(dx, matmul(dax, adapter.A), s);
    return dx;
}

// ---------------------------------------------------------------------------
// Expert bank and router

ExpertBank ExpertBank::create(std::size_t K, std::size_t d, std::size_t d_out, std::size_t rank) {
    if (K == 0) throw ConfigError("molre: expert bank needs K >= 1");
    if (rank == 0 || rank > std::min(d, d_out)) {
        throw ConfigError("molre: expert rank " + std::to_string(rank) + " must be in [1, min(d, d_out)]");
    }
    ExpertBank bank;
    bank.rank = rank;
    bank.experts.reserve(K);
    for (std::size_t i = 0; i < K; ++i) bank.experts.push_back({Tensor({rank, d}), Tensor({d_out, rank})});
    return bank;
}

std::size_t ExpertBank::in_dim() const {
    validate();
    return experts.front().A.cols();
}

std::size_t ExpertBank::out_dim() const {
    validate();
    return experts.front().B.rows();
}

void ExpertBank::validate() const {
    if (experts.empty()) throw ConfigError("molre: expert bank is empty (K = 0)");
    const Shape a = experts.front().A.shape();
    const Shape b = experts.front().B.shape();
    for (const auto& e : experts) {
        if (e.A.shape() != a || e.B.shape() != b) throw DimensionError("molre: experts disagree on (r, d, d_out)");
    }
}

Router Router::create(std::size_t d, std::size_t hidden, std::size_t K) {
    if (d == 0 || hidden == 0 || K == 0) throw ConfigError("router: dimensions must be positive");
    return Router{Tensor({hidden, d}), Tensor({hidden}), Tensor({K, hidden}), Tensor({K})};
}

Tensor router_forward(const Router& router, const Tensor& x) {
    RouterCache cache;
    return router_forward(router, x, cache);
}

Tensor router_forward(const Router& router, const Tensor& x, RouterCache& cache) {
    require_cols(x, router.in_dim(), "router_forward");
    cache.pre = linear(x, router.W1, &router.b1);
    cache.hidden = relu(cache.pre);
    cache.gates = softmax(linear(cache.hidden, router.W2, &router.b2), 1);
    return cache.gates;
}

Tensor router_backward(Router& router, const Tensor& x, const RouterCache& cache, const Tensor& dgates) {
    const Tensor dlogits = softmax_backward(cache.gates, dgates, 1);
    accumulate(router.W2.grad(), matmul_tn(dlogits, cache.hidden).data());
    auto db2 = router.b2.grad();
    for (std::size_t n = 0; n < dlogits.rows(); ++n) accumulate(db2, dlogits.row(n));

    const Tensor dpre = relu_backward(cache.pre, matmul(dlogits, router.W2));
    accumulate(router.W1.grad(), matmul_tn(dpre, x).data());
    auto db1 = router.b1.grad();
    for (std::size_t n = 0; n < dpre.rows(); ++n) accumulate(db1, dpre.row(n));
    return matmul(dpre, router.W1);
}

// ---------------------------------------------------------------------------
// MoLRE

MolreLayer MolreLayer::create(std::size_t d, std::size_t d_out, std::size_t K, std::size_t rank, std::size_t hidden,
                              double scaling) {
    MolreLayer layer;
    layer.W0 = d == d_out ? Tensor::identity(d) : Tensor({d_out, d});
    layer.bank = ExpertBank::create(K, d, d_out, rank);
    layer.router = Router::create(d, hidden, K);
    layer.scaling = scaling;
    return layer;
}

std::size_t MolreLayer::trainable_count() const {
    std::size_t n = router.W1.size() + router.b1.size() + router.W2.size() + router.b2.size();
    for (const auto& e : bank.experts) n += e.A.size() + e.B.size();
    return n;
}

Tensor molre_forward(const MolreLayer& layer, const Tensor& x) {
    MolreCache cache;
    return molre_forward(layer, x, cache);
}

Tensor molre_forward(const MolreLayer& layer, const Tensor& x, MolreCache& cache) {
    layer.bank.validate();
    require_cols(x, layer.in_dim(), "molre_forward");
    if (layer.bank.in_dim() != layer.in_dim() || layer.bank.out_dim() != layer.out_dim() ||
        layer.router.in_dim() != layer.in_dim() || layer.router.num_experts() != layer.num_experts()) {
        throw DimensionError("molre_forward: W0 " + shape_to_string(layer.W0.shape()) +
                             " inconsistent with expert bank or router");
    }
    const Tensor gates = router_forward(layer.router, x, cache.route);
    Tensor h = matmul_nt(x, layer.W0);
    const std::size_t K = layer.num_experts();
    cache.projected.resize(K);
    cache.updates.resize(K);
    for (std::size_t i = 0; i < K; ++i) {
        const auto& e = layer.bank.experts[i];
        cache.projected[i] = matmul_nt(x, e.A);
        Tensor update = matmul_nt(cache.projected[i], e.B);
        for (double& v : update.data()) v *= layer.scaling;
        add_scaled(h, scale_rows(update, gates, i));
        cache.updates[i] = std::move(update);
    }
    return h;
}

Tensor molre_backward(MolreLayer& layer, const Tensor& x, const MolreCache& cache, const Tensor& dh,
                      const Tensor* extra_dgates) {
    const std::size_t K = layer.num_experts();
    const std::size_t N = x.rows();
    const Tensor& gates = cache.route.gates;

    Tensor dx = matmul(dh, layer.W0);
    Tensor dgates({N, K});
    for (std::size_t i = 0; i < K; ++i) {
        auto& e = layer.bank.experts[i];
        for (std::size_t n = 0; n < N; ++n) {
            auto u = cache.updates[i].row(n);
            auto g = dh.row(n);
            double dot = 0.0;
            for (std::size_t j = 0; j < u.size(); ++j) dot += u[j] * g[j];
            dgates.at(n, i) = dot;
        }
        // d(update_i) = g_i * dh, and update_i = s * (A_i x) B_i^T
        const Tensor dupdate = scale_rows(dh, gates, i);
        accumulate(e.B.grad(), matmul_tn(dupdate, cache.projected[i]).data(), layer.scaling);
        Tensor dproj = matmul(dupdate, e.B);
        for (double& v : dproj.data()) v *= layer.scaling;
        accumulate(e.A.grad(), matmul_tn(dproj, x).data());
        add_scaled(dx, matmul(dproj, e.A));
    }
    if (extra_dgates) add_scaled(dgates, *extra_dgates);
    add_scaled(dx, router_backward(layer.router, x, cache.route, dgates));
    return dx;
}

void init_adapter_params(ExpertBank& bank, Router& router, RngStream& rng) {
    bank.validate();
    const double d = static_cast<double>(bank.in_dim());
    for (auto& e : bank.experts) {
        fill_gaussian(e.A, rng, 1.0 / d);
        e.B.fill(0.0);
    }
    fill_gaussian(router.W1, rng, 2.0 / static_cast<double>(router.in_dim()));
    router.b1.fill(0.0);
    fill_gaussian(router.W2, rng, 2.0 / static_cast<double>(router.hidden_dim()));
    router.b2.fill(0.0);
}

std::int64_t count_molre_params(std::int64_t d, std::int64_t d_out, std::int64_t K, std::int64_t r,
                                std::int64_t d_h) {
    if (d <= 0 || d_out <= 0 || K <= 0 || r <= 0 || d_h <= 0) {
        throw ConfigError("count_molre_params: all dimensions must be positive");
    }
    return K * (r * d + d_out * r) + (d_h * d + d_h) + (K * d_h + K);
}

double gate_balance_penalty(const Tensor& gates) {
    const std::size_t N = gates.rows(), K = gates.cols();
    double penalty = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
        double mean = 0.0;
        for (std::size_t n = 0; n < N; ++n) mean += gates.at(n, i);
        mean /= static_cast<double>(N);
        penalty += mean * mean;
    }
    return static_cast<double>(K) * penalty;
}

Tensor gate_balance_grad(const Tensor& gates) {
    const std::size_t N = gates.rows(), K = gates.cols();
    Tensor g(gates.shape());
    for (std::size_t i = 0; i < K; ++i) {
        double mean = 0.0;
        for (std::size_t n = 0; n < N; ++n) mean += gates.at(n, i);
        mean /= static_cast<double>(N);
        const double d = 2.0 * static_cast<double>(K) * mean / static_cast<double>(N);
        for (std::size_t n = 0; n < N; ++n) g.at(n, i) = d;
    }
    return g;
}

}  // namespace molre
