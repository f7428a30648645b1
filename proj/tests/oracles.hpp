// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// Reference implementations for tests. These use plain nested loops and
// share no code with the library beyond the Tensor container.

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "molre/core/rng.hpp"
#include "molre/core/tensor.hpp"

namespace molre::oracle {

inline Tensor random_tensor(Shape shape, RngStream& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = scale * rng.normal();
    return t;
}

// y[n][o] = sum_i W[o][i] x[n][i]
inline std::vector<std::vector<double>> apply(const Tensor& W, const std::vector<std::vector<double>>& x) {
    std::vector<std::vector<double>> y(x.size(), std::vector<double>(W.rows(), 0.0));
    for (std::size_t n = 0; n < x.size(); ++n)
        for (std::size_t o = 0; o < W.rows(); ++o)
            for (std::size_t i = 0; i < W.cols(); ++i) y[n][o] += W.at(o, i) * x[n][i];
    return y;
}

inline std::vector<std::vector<double>> rows_of(const Tensor& t) {
    std::vector<std::vector<double>> out(t.rows(), std::vector<double>(t.cols()));
    for (std::size_t r = 0; r < t.rows(); ++r)
        for (std::size_t c = 0; c < t.cols(); ++c) out[r][c] = t.at(r, c);
    return out;
}

struct NaiveExpert {
    Tensor A, B;
};

// h = W0 x + sum_i g_i(x) s B_i A_i x with g = softmax(W2 relu(W1 x + b1) + b2).
inline std::vector<std::vector<double>> naive_molre(const Tensor& W0, const std::vector<NaiveExpert>& experts,
                                                    const Tensor& W1, const Tensor& b1, const Tensor& W2,
                                                    const Tensor& b2, double s, const Tensor& x) {
    const auto xs = rows_of(x);
    auto h = apply(W0, xs);
    const std::size_t K = experts.size();
    for (std::size_t n = 0; n < xs.size(); ++n) {
        std::vector<double> hid(W1.rows());
        for (std::size_t j = 0; j < W1.rows(); ++j) {
            double acc = b1[j];
            for (std::size_t i = 0; i < W1.cols(); ++i) acc += W1.at(j, i) * xs[n][i];
            hid[j] = acc > 0.0 ? acc : 0.0;
        }
        std::vector<double> logit(K);
        double top = -1e300;
        for (std::size_t k = 0; k < K; ++k) {
            double acc = b2[k];
            for (std::size_t j = 0; j < hid.size(); ++j) acc += W2.at(k, j) * hid[j];
            logit[k] = acc;
            top = std::max(top, acc);
        }
        double z = 0.0;
        for (double& l : logit) z += (l = std::exp(l - top));
        for (std::size_t k = 0; k < K; ++k) {
            const double g = logit[k] / z;
            const auto ax = apply(experts[k].A, {xs[n]})[0];
            const auto bax = apply(experts[k].B, {ax})[0];
            for (std::size_t o = 0; o < h[n].size(); ++o) h[n][o] += g * s * bax[o];
        }
    }
    return h;
}

// Fraction of (positive, negative) pairs ranked correctly, ties counted half.
inline double brute_auc(const std::vector<double>& scores, const std::vector<double>& labels) {
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1.0) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0.0) continue;
            pairs += 1.0;
            if (scores[i] > scores[j]) {
                wins += 1.0;
            } else if (scores[i] == scores[j]) {
                wins += 0.5;
            }
        }
    }
    return wins / pairs;
}

inline double bce(double p, double y) { return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p)); }

// Central differences of `loss` with respect to every entry of `param`.
inline std::vector<double> numeric_grad(Tensor& param, const std::function<double()>& loss, double eps = 1e-5) {
    std::vector<double> g(param.size());
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double keep = param[i];
        param[i] = keep + eps;
        const double up = loss();
        param[i] = keep - eps;
        const double down = loss();
        param[i] = keep;
        g[i] = (up - down) / (2.0 * eps);
    }
    return g;
}

inline double grad_rel_error(double a, double n) {
    return std::abs(a - n) / std::max(1e-6, std::max(std::abs(a), std::abs(n)));
}

}  // namespace molre::oracle
