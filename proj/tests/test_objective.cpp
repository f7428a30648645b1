// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>

#include "molre/core/errors.hpp"
#include "molre/core/ops.hpp"
#include "molre/train/objective.hpp"
#include "molre/train/optim.hpp"
#include "molre/train/sampling.hpp"
#include "oracles.hpp"

using namespace molre;
using Catch::Matchers::WithinAbs;

namespace {

FocalLossConfig focal(double gamma, std::vector<double> alpha) {
    FocalLossConfig c;
    c.gamma = gamma;
    const std::size_t n = alpha.size();
    c.alpha = Tensor({n}, std::move(alpha));
    return c;
}

Tensor random_labels(std::size_t n, std::size_t c, RngStream& rng, double p = 0.4) {
    Tensor y({n, c});
    for (double& v : y.data()) v = rng.bernoulli(p) ? 1.0 : 0.0;
    return y;
}

}  // namespace

TEST_CASE("focal loss reduces to half BCE at gamma 0, alpha 0.5") {
    RngStream rng(1, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.below(6), c = 1 + rng.below(6);
        Tensor p({n, c});
        for (double& v : p.data()) v = rng.uniform(0.01, 0.99);
        const Tensor y = random_labels(n, c, rng);
        double bce = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) bce += oracle::bce(p[i], y[i]);
        bce /= static_cast<double>(p.size());
        CHECK(std::abs(focal_loss(p, y, focal(0.0, std::vector<double>(c, 0.5))) - 0.5 * bce) < 1e-12);
    }
}

TEST_CASE("focal loss scalar examples") {
    const Tensor half = Tensor::matrix({{0.5}}), pos = Tensor::matrix({{1.0}});
    CHECK(std::abs(focal_loss(half, pos, focal(2.0, {1.0})) - 0.25 * std::log(2.0)) < 1e-12);
    CHECK_THAT(focal_loss(half, pos, focal(2.0, {1.0})), WithinAbs(0.17329, 1e-5));

    const auto at = [&](double p, double gamma) { return focal_loss(Tensor::matrix({{p}}), pos, focal(gamma, {1.0})); };
    const double focused = at(0.9, 2.0) / at(0.6, 2.0);
    const double plain = at(0.9, 0.0) / at(0.6, 0.0);
    CHECK(focused < 0.1 * plain);

    CHECK(std::isfinite(focal_loss(Tensor::matrix({{0.0, 1.0}}), Tensor::matrix({{1.0, 0.0}}), focal(2.0, {0.5, 0.5}))));
}

TEST_CASE("focal loss decreases in p for a positive label") {
    for (double gamma : {0.0, 0.5, 2.0, 5.0}) {
        double prev = std::numeric_limits<double>::infinity();
        for (int i = 1; i < 1000; ++i) {
            const double cur = focal_loss(Tensor::matrix({{i / 1000.0}}), Tensor::matrix({{1.0}}), focal(gamma, {0.7}));
            CHECK(cur < prev);
            prev = cur;
        }
    }
}

TEST_CASE("focal loss gradients match finite differences") {
    RngStream rng(2, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.below(4), c = 1 + rng.below(4);
        const Tensor logits = oracle::random_tensor({n, c}, rng, 2.0);
        const Tensor y = random_labels(n, c, rng);
        std::vector<double> alpha(c);
        for (double& a : alpha) a = rng.uniform(0.05, 0.95);
        const auto cfg = focal(rng.uniform(0.0, 3.0), alpha);
        const Tensor g = focal_loss_logit_grad(sigmoid(logits), y, cfg);
        const Tensor num =
            finite_diff_grad([&](const Tensor& z) { return focal_loss(sigmoid(z), y, cfg); }, logits, 1e-5);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(relative_error(g[i], num[i]) < 1e-4);
    }
    CHECK_THROWS_AS(focal_loss(Tensor({2, 2}), Tensor({2, 3}), focal(2.0, {0.5, 0.5})), DimensionError);
}

TEST_CASE("prevalence weights") {
    Tensor y({100, 3});
    for (std::size_t n = 0; n < 100; ++n) {
        y.at(n, 0) = n < 50 ? 1.0 : 0.0;
        y.at(n, 1) = n == 0 ? 1.0 : 0.0;
        y.at(n, 2) = 1.0;
    }
    const Tensor a = prevalence_weights(y);
    CHECK(a[0] == 0.5);
    CHECK(a[1] == 0.95);
    CHECK(a[2] == 0.05);
}

TEST_CASE("adamw examples") {
    Tensor w = Tensor::vector({1.5, -2.0});
    w.grad();
    OptimizerState st;
    st.config.weight_decay = 0.0;
    const std::vector<ParamRef> params{{"w", &w, ParamGroup::Head}};
    adamw_step(st, params);
    CHECK(w[0] == 1.5);
    CHECK(w[1] == -2.0);

    Tensor s = Tensor::vector({0.0});
    s.grad()[0] = 1.0;
    OptimizerState one;
    one.config = {0.9, 0.999, 1e-8, 0.0};
    one.lr = {0.1, 0.1};
    adamw_step(one, std::vector<ParamRef>{{"s", &s, ParamGroup::Head}});
    CHECK_THAT(s[0], WithinAbs(-0.1, 1e-8));

    const OptimizerState defaults;
    CHECK(defaults.group_lr(ParamGroup::Head) == 1e-3);
    CHECK(defaults.group_lr(ParamGroup::Adapter) == 1e-4);
}

TEST_CASE("adamw groups use their own learning rates and decoupled decay") {
    Tensor h = Tensor::vector({1.0}), a = Tensor::vector({1.0});
    h.grad()[0] = 0.0;
    a.grad()[0] = 0.0;
    OptimizerState st;
    st.config.weight_decay = 0.5;
    adamw_step(st, std::vector<ParamRef>{{"h", &h, ParamGroup::Head}, {"a", &a, ParamGroup::Adapter}});
    CHECK(h[0] == 1.0 - 1e-3 * 0.5);
    CHECK(a[0] == 1.0 - 1e-4 * 0.5);
}

TEST_CASE("adamw without decay equals a reference adam trajectory bit for bit") {
    RngStream rng(3, 0);
    Tensor w = oracle::random_tensor({5}, rng);
    std::vector<double> ref(w.data().begin(), w.data().end()), m(5, 0.0), v(5, 0.0);
    OptimizerState st;
    st.config.weight_decay = 0.0;
    st.lr = {0.01, 0.01};
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 0.01;
    for (int t = 1; t <= 50; ++t) {
        const Tensor g = oracle::random_tensor({5}, rng);
        std::copy(g.data().begin(), g.data().end(), w.grad().begin());
        adamw_step(st, std::vector<ParamRef>{{"w", &w, ParamGroup::Head}});
        for (std::size_t i = 0; i < 5; ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double mh = m[i] / (1.0 - std::pow(b1, t)), vh = v[i] / (1.0 - std::pow(b2, t));
            ref[i] -= lr * mh / (std::sqrt(vh) + eps);
        }
        for (std::size_t i = 0; i < 5; ++i) CHECK(w[i] == ref[i]);
    }
    CHECK(st.step == 50);
}

TEST_CASE("gradient clipping by global norm") {
    Tensor a = Tensor::vector({0.0, 0.0}), b = Tensor::vector({0.0});
    a.grad()[0] = 3.0;
    a.grad()[1] = 0.0;
    b.grad()[0] = 4.0;
    const std::vector<ParamRef> ps{{"a", &a, ParamGroup::Head}, {"b", &b, ParamGroup::Adapter}};
    CHECK(clip_grad_norm(ps, 10.0) == 5.0);
    CHECK(b.grad()[0] == 4.0);
    CHECK(clip_grad_norm(ps, 1.0) == 5.0);
    CHECK_THAT(a.grad()[0], WithinAbs(0.6, 1e-15));
    CHECK_THAT(b.grad()[0], WithinAbs(0.8, 1e-15));
}

TEST_CASE("repeat factor examples") {
    Tensor common({10, 2}, 1.0);
    for (double r : repeat_factors(common, 0.01)) CHECK(r == 1.0);

    // Class 0 at frequency 1/400, class 1 at frequency 1/100, t = 0.01.
    Tensor y({400, 2});
    y.at(0, 0) = 1.0;
    for (std::size_t n = 0; n < 4; ++n) y.at(10 + n, 1) = 1.0;
    const auto cls = class_repeat_factors(y, 0.01);
    CHECK_THAT(cls[0], WithinAbs(2.0, 1e-15));
    CHECK(cls[1] == 1.0);
    const auto r = repeat_factors(y, 0.01);
    CHECK_THAT(r[0], WithinAbs(2.0, 1e-15));
    CHECK(r[1] == 1.0);
    CHECK(r[10] == 1.0);

    y.at(10, 0) = 1.0;  // now f(class 0) = 2/400
    const auto r2 = repeat_factors(y, 0.01);
    CHECK_THAT(r2[10], WithinAbs(std::sqrt(2.0), 1e-15));
    CHECK_THROWS_AS(repeat_factors(y, 0.0), ConfigError);
}

TEST_CASE("repeat factor rules on random label sets") {
    RngStream rng(4, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 20 + rng.below(200), c = 1 + rng.below(6);
        const double t = rng.uniform(0.01, 0.5);
        Tensor y({n, c});
        for (std::size_t j = 0; j < c; ++j) {
            const double p = rng.uniform(0.0, 0.6);
            for (std::size_t i = 0; i < n; ++i) y.at(i, j) = rng.bernoulli(p) ? 1.0 : 0.0;
        }
        const auto r = repeat_factors(y, t);
        for (std::size_t i = 0; i < n; ++i) {
            double expect = 1.0;
            for (std::size_t j = 0; j < c; ++j) {
                if (y.at(i, j) != 1.0) continue;
                double f = 0.0;
                for (std::size_t k = 0; k < n; ++k) f += y.at(k, j);
                f /= static_cast<double>(n);
                expect = std::max(expect, f >= t ? 1.0 : std::sqrt(t / f));
            }
            CHECK_THAT(r[i], WithinAbs(expect, 1e-12));
        }
    }
}

TEST_CASE("stochastic rounding matches the repeat factor in expectation") {
    RngStream rng(5, 0);
    for (double r : {1.0, 1.6, 2.25, 3.9}) {
        double total = 0.0;
        for (int i = 0; i < 10000; ++i) {
            const auto k = sample_repeat_count(r, rng);
            CHECK((k == static_cast<std::size_t>(std::floor(r)) || k == static_cast<std::size_t>(std::floor(r)) + 1));
            total += static_cast<double>(k);
        }
        CHECK(std::abs(total / 10000.0 - r) < 0.05);
    }
    const auto idx = expand_indices({1.0, 2.0, 1.0}, rng);
    CHECK(idx == std::vector<std::size_t>{0, 1, 1, 2});
    auto shuffled = idx;
    shuffle_indices(shuffled, rng);
    std::sort(shuffled.begin(), shuffled.end());
    CHECK(shuffled == idx);
}
