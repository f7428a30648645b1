// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// Low-rank adapters: a single LoRA update, a bank of K low-rank experts and
// the softmax router that mixes them.
//
// All layers use the row convention: an input batch x is [N x d] and a weight
// W [d_out x d] acts on every row, so W x is computed as x W^T.
//
//   lora:   h = W0 x + (alpha / r) B A x
//   molre:  h = W0 x + sum_i g_i(x) * s * B_i A_i x
//           g(x) = softmax(W2 relu(W1 x + b1) + b2)
//
// W0 is frozen in both cases and never receives a gradient buffer.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "molre/core/rng.hpp"
#include "molre/core/tensor.hpp"

namespace molre {

struct LoraAdapter {
    Tensor A;  // [r x d]
    Tensor B;  // [d_out x r]
    std::size_t rank = 0;
    double alpha = 0.0;

    /// Zero A and B; call init_lora() for the training initialisation.
    static LoraAdapter create(std::size_t d, std::size_t d_out, std::size_t rank, double alpha);

    double scaling() const noexcept { return alpha / static_cast<double>(rank); }
    std::size_t in_dim() const { return A.cols(); }
    std::size_t out_dim() const { return B.rows(); }
    std::size_t parameter_count() const noexcept { return A.size() + B.size(); }
};

/// A ~ N(0, 1/d), B = 0.
void init_lora(LoraAdapter& adapter, RngStream& rng);

Tensor lora_forward(const LoraAdapter& adapter, const Tensor& W0, const Tensor& x);
/// Accumulates into A.grad and B.grad; returns dL/dx.
Tensor lora_backward(LoraAdapter& adapter, const Tensor& W0, const Tensor& x, const Tensor& dh);

struct LowRankExpert {
    Tensor A;  // [r x d]
    Tensor B;  // [d_out x r]
};

struct ExpertBank {
    std::vector<LowRankExpert> experts;
    std::size_t rank = 0;

    static ExpertBank create(std::size_t K, std::size_t d, std::size_t d_out, std::size_t rank);
    std::size_t size() const noexcept { return experts.size(); }
    std::size_t in_dim() const;
    std::size_t out_dim() const;
    void validate() const;
};

struct Router {
    Tensor W1;  // [d_h x d]
    Tensor b1;  // [d_h]
    Tensor W2;  // [K x d_h]
    Tensor b2;  // [K]

    static Router create(std::size_t d, std::size_t hidden, std::size_t K);
    std::size_t in_dim() const { return W1.cols(); }
    std::size_t hidden_dim() const { return W1.rows(); }
    std::size_t num_experts() const { return W2.rows(); }
};

struct RouterCache {
    Tensor pre;     // W1 x + b1, [N x d_h]
    Tensor hidden;  // relu(pre)
    Tensor gates;   // [N x K]
};

/// Soft gates, one simplex row per input row.
Tensor router_forward(const Router& router, const Tensor& x);
Tensor router_forward(const Router& router, const Tensor& x, RouterCache& cache);
/// Accumulates router parameter gradients; returns dL/dx.
Tensor router_backward(Router& router, const Tensor& x, const RouterCache& cache, const Tensor& dgates);

struct MolreLayer {
    Tensor W0;  // [d_out x d], frozen
    ExpertBank bank;
    Router router;
    double scaling = 2.0;  // s applied to every expert update

    /// W0 defaults to the identity when d == d_out (residual adaptation of
    /// extracted features); pass an explicit W0 otherwise.
    static MolreLayer create(std::size_t d, std::size_t d_out, std::size_t K, std::size_t rank, std::size_t hidden,
                             double scaling);
    std::size_t in_dim() const { return W0.cols(); }
    std::size_t out_dim() const { return W0.rows(); }
    std::size_t num_experts() const noexcept { return bank.size(); }
    std::size_t trainable_count() const;
};

struct MolreCache {
    RouterCache route;
    std::vector<Tensor> projected;  // A_i x, [N x r] per expert
    std::vector<Tensor> updates;    // s B_i A_i x, [N x d_out] per expert
};

Tensor molre_forward(const MolreLayer& layer, const Tensor& x);
Tensor molre_forward(const MolreLayer& layer, const Tensor& x, MolreCache& cache);
/// Gradients reach every A_i, B_i and the router; W0 is untouched. Returns dL/dx.
/// `extra_dgates` adds a direct gradient on the gates (auxiliary losses).
Tensor molre_backward(MolreLayer& layer, const Tensor& x, const MolreCache& cache, const Tensor& dh,
                      const Tensor* extra_dgates = nullptr);

/// A_i ~ N(0, 1/d), B_i = 0, router weights ~ N(0, 2/fan_in), biases 0.
void init_adapter_params(ExpertBank& bank, Router& router, RngStream& rng);

/// K (r d + d_out r) + (d_h d + d_h) + (K d_h + K).
std::int64_t count_molre_params(std::int64_t d, std::int64_t d_out, std::int64_t K, std::int64_t r, std::int64_t d_h);

/// Switch-style balance penalty K * sum_i mean_n(g_ni)^2 and its gate gradient.
/// Minimised by uniform average usage; weight 0 disables it.
double gate_balance_penalty(const Tensor& gates);
Tensor gate_balance_grad(const Tensor& gates);

}  // namespace molre
