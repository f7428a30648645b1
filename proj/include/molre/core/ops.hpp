// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable primitives. Every forward op has an explicit backward that
// maps the upstream gradient to gradients of its inputs; layers compose these
// by hand, there is no tape.

#pragma once

#include <cstddef>
#include <functional>

#include "molre/core/tensor.hpp"

namespace molre {

struct MatmulGrads {
    Tensor da;
    Tensor db;
};

/// c = a * b for a [m x k], b [k x n].
Tensor matmul(const Tensor& a, const Tensor& b);
MatmulGrads matmul_backward(const Tensor& a, const Tensor& b, const Tensor& dc);

/// a * b^T for a [m x k], b [n x k].
Tensor matmul_nt(const Tensor& a, const Tensor& b);
/// a^T * b for a [k x m], b [k x n].
Tensor matmul_tn(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// Row-wise dense layer y = x W^T (+ bias), x [N x in], W [out x in].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor* bias = nullptr);

/// In-place a += scale * b.
void add_scaled(Tensor& a, const Tensor& b, double scale = 1.0);
/// In-place accumulation into a gradient span.
void accumulate(std::span<double> dst, std::span<const double> src, double scale = 1.0);

/// Softmax along `axis`, using max subtraction.
Tensor softmax(const Tensor& x, std::size_t axis);
/// dx given y = softmax(x) and dy.
Tensor softmax_backward(const Tensor& y, const Tensor& dy, std::size_t axis);

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& dy);

double sigmoid(double x) noexcept;
Tensor sigmoid(const Tensor& x);
/// dx given y = sigmoid(x) and dy.
Tensor sigmoid_backward(const Tensor& y, const Tensor& dy);

Tensor tanh(const Tensor& x);
Tensor tanh_backward(const Tensor& y, const Tensor& dy);

/// Central finite differences of a scalar function; throws NumericalError
/// when any evaluation is non-finite.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x, double eps);

/// |a - n| / max(|a|, |n|, floor), the comparison used by gradient checks.
double relative_error(double analytic, double numeric, double floor = 1e-6) noexcept;

}  // namespace molre
