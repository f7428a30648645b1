// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0

#include "molre/core/ops.hpp"

#include <algorithm>
#include <cmath>

#include "molre/core/errors.hpp"

namespace molre {

namespace {

void require_matrix(const Tensor& t, const char* op) {
    if (t.rank() != 2) {
        throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_to_string(t.shape()));
    }
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
    throw DimensionError(std::string(op) + ": incompatible shapes " + shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) mismatch(op, a, b);
}

struct AxisLayout {
    std::size_t outer = 1;
    std::size_t n = 1;
    std::size_t inner = 1;
};

AxisLayout axis_layout(const Tensor& x, std::size_t axis) {
    if (axis >= x.rank()) {
        throw DimensionError("softmax: axis " + std::to_string(axis) + " out of range for " +
                             shape_to_string(x.shape()));
    }
    AxisLayout l;
    for (std::size_t i = 0; i < axis; ++i) l.outer *= x.shape()[i];
    l.n = x.shape()[axis];
    for (std::size_t i = axis + 1; i < x.rank(); ++i) l.inner *= x.shape()[i];
    if (l.n == 0) throw DimensionError("softmax over an empty axis");
    return l;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    if (a.cols() != b.rows()) mismatch("matmul", a, b);
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor c({m, n});
    const double* A = a.data().data();
    const double* B = b.data().data();
    double* C = c.data().data();
    // Four output rows share each pass over b; every element still sums over p in order.
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        double* c0 = C + i * n;
        double* c1 = c0 + n;
        double* c2 = c1 + n;
        double* c3 = c2 + n;
        for (std::size_t p = 0; p < k; ++p) {
            const double a0 = A[i * k + p], a1 = A[(i + 1) * k + p], a2 = A[(i + 2) * k + p], a3 = A[(i + 3) * k + p];
            const double* bp = B + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                const double bj = bp[j];
                c0[j] += a0 * bj;
                c1[j] += a1 * bj;
                c2[j] += a2 * bj;
                c3[j] += a3 * bj;
            }
        }
    }
    for (; i < m; ++i) {
        double* ci = C + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = A[i * k + p];
            const double* bp = B + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
    return c;
}

// Transposes b so the inner loop streams rows; the summation order over k is
// the same as a plain dot product.
Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul_nt");
    require_matrix(b, "matmul_nt");
    if (a.cols() != b.cols()) mismatch("matmul_nt", a, b);
    return matmul(a, transpose(b));
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul_tn");
    require_matrix(b, "matmul_tn");
    if (a.rows() != b.rows()) mismatch("matmul_tn", a, b);
    const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
    Tensor c({m, n});
    double* C = c.data().data();
    for (std::size_t p = 0; p < k; ++p) {
        const double* ap = &a.data()[p * m];
        const double* bp = &b.data()[p * n];
        std::size_t i = 0;
        for (; i + 4 <= m; i += 4) {
            const double a0 = ap[i], a1 = ap[i + 1], a2 = ap[i + 2], a3 = ap[i + 3];
            if (a0 == 0.0 && a1 == 0.0 && a2 == 0.0 && a3 == 0.0) continue;
            double* c0 = C + i * n;
            double* c1 = c0 + n;
            double* c2 = c1 + n;
            double* c3 = c2 + n;
            for (std::size_t j = 0; j < n; ++j) {
                const double bj = bp[j];
                c0[j] += a0 * bj;
                c1[j] += a1 * bj;
                c2[j] += a2 * bj;
                c3[j] += a3 * bj;
            }
        }
        for (; i < m; ++i) {
            const double api = ap[i];
            if (api == 0.0) continue;
            double* ci = C + i * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
        }
    }
    return c;
}

Tensor transpose(const Tensor& a) {
    require_matrix(a, "transpose");
    Tensor t({a.cols(), a.rows()});
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t.at(j, i) = a.at(i, j);
    return t;
}

MatmulGrads matmul_backward(const Tensor& a, const Tensor& b, const Tensor& dc) {
    if (dc.rank() != 2 || dc.rows() != a.rows() || dc.cols() != b.cols()) mismatch("matmul_backward", a, dc);
    return {matmul_nt(dc, b), matmul_tn(a, dc)};
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor* bias) {
    Tensor y = matmul_nt(x, weight);
    if (bias) {
        if (bias->size() != weight.rows()) mismatch("linear bias", *bias, weight);
        for (std::size_t i = 0; i < y.rows(); ++i) {
            auto r = y.row(i);
            for (std::size_t j = 0; j < r.size(); ++j) r[j] += (*bias)[j];
        }
    }
    return y;
}

void add_scaled(Tensor& a, const Tensor& b, double scale) {
    require_same_shape("add_scaled", a, b);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += scale * b[i];
}

void accumulate(std::span<double> dst, std::span<const double> src, double scale) {
    if (dst.size() != src.size()) throw DimensionError("accumulate: gradient length mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

Tensor softmax(const Tensor& x, std::size_t axis) {
    const AxisLayout l = axis_layout(x, axis);
    Tensor y(x.shape());
    for (std::size_t o = 0; o < l.outer; ++o) {
        for (std::size_t in = 0; in < l.inner; ++in) {
            const std::size_t base = o * l.n * l.inner + in;
            double mx = x[base];
            for (std::size_t k = 1; k < l.n; ++k) mx = std::max(mx, x[base + k * l.inner]);
            double sum = 0.0;
            for (std::size_t k = 0; k < l.n; ++k) {
                const double e = std::exp(x[base + k * l.inner] - mx);
                y[base + k * l.inner] = e;
                sum += e;
            }
            for (std::size_t k = 0; k < l.n; ++k) y[base + k * l.inner] /= sum;
        }
    }
    return y;
}

Tensor softmax_backward(const Tensor& y, const Tensor& dy, std::size_t axis) {
    require_same_shape("softmax_backward", y, dy);
    const AxisLayout l = axis_layout(y, axis);
    Tensor dx(y.shape());
    for (std::size_t o = 0; o < l.outer; ++o) {
        for (std::size_t in = 0; in < l.inner; ++in) {
            const std::size_t base = o * l.n * l.inner + in;
            double dot = 0.0;
            for (std::size_t k = 0; k < l.n; ++k) dot += y[base + k * l.inner] * dy[base + k * l.inner];
            for (std::size_t k = 0; k < l.n; ++k) {
                const std::size_t i = base + k * l.inner;
                dx[i] = y[i] * (dy[i] - dot);
            }
        }
    }
    return dx;
}

Tensor relu(const Tensor& x) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
    require_same_shape("relu_backward", x, dy);
    Tensor dx(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
    return dx;
}

double sigmoid(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& x) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = sigmoid(x[i]);
    return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
    require_same_shape("sigmoid_backward", y, dy);
    Tensor dx(y.shape());
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * y[i] * (1.0 - y[i]);
    return dx;
}

Tensor tanh(const Tensor& x) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
    return y;
}

Tensor tanh_backward(const Tensor& y, const Tensor& dy) {
    require_same_shape("tanh_backward", y, dy);
    Tensor dx(y.shape());
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * (1.0 - y[i] * y[i]);
    return dx;
}

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x, double eps) {
    if (!(eps > 0.0)) throw NumericalError("finite_diff_grad: eps must be positive");
    Tensor probe = x;
    probe.clear_grad();
    Tensor g(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + eps;
        const double fp = f(probe);
        probe[i] = orig - eps;
        const double fm = f(probe);
        probe[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw NumericalError("finite_diff_grad: non-finite function value at coordinate " + std::to_string(i));
        }
        g[i] = (fp - fm) / (2.0 * eps);
    }
    return g;
}

double relative_error(double analytic, double numeric, double floor) noexcept {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

}  // namespace molre
