// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "molre/core/errors.hpp"
#include "molre/core/ops.hpp"
#include "molre/core/rng.hpp"
#include "molre/core/tensor.hpp"
#include "oracles.hpp"

using namespace molre;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

double sum_weighted(const Tensor& y, const Tensor& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
    return s;
}

void check_grad(const Tensor& analytic, const Tensor& numeric) {
    REQUIRE(analytic.shape() == numeric.shape());
    for (std::size_t i = 0; i < analytic.size(); ++i) CHECK(relative_error(analytic[i], numeric[i]) < 1e-4);
}

}  // namespace

TEST_CASE("tensor construction and shape checks") {
    Tensor t({2, 3}, 1.5);
    CHECK(t.size() == 6);
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 3);
    CHECK_FALSE(t.has_grad());
    t.grad()[0] = 2.0;
    CHECK(t.has_grad());
    CHECK(t.grad().size() == 6);
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1.0, 2.0, 3.0}), DimensionError);
    CHECK_THROWS_AS(t.reshaped({4, 2}), DimensionError);
    CHECK(t.reshaped({3, 2}).shape() == Shape{3, 2});
    CHECK_THROWS_AS(Tensor::matrix({{1.0, 2.0}, {3.0}}), DimensionError);
}

TEST_CASE("matmul examples") {
    RngStream rng(1, 2);
    const Tensor v = oracle::random_tensor({3, 1}, rng);
    CHECK(bitwise_equal(matmul(Tensor::identity(3), v), v));

    const Tensor c = matmul(Tensor::matrix({{1, 2}, {3, 4}}), Tensor::matrix({{1}, {1}}));
    CHECK(c.shape() == Shape{2, 1});
    CHECK(c[0] == 3.0);
    CHECK(c[1] == 7.0);

    const Tensor z = matmul(Tensor::zeros({2, 5}), oracle::random_tensor({5, 3}, rng));
    CHECK(z.shape() == Shape{2, 3});
    for (double x : z.data()) CHECK(x == 0.0);
}

TEST_CASE("matmul shape mismatch names both shapes") {
    CHECK_THROWS_WITH(matmul(Tensor({2, 3}), Tensor({4, 2})),
                      ContainsSubstring("[2x3]") && ContainsSubstring("[4x2]"));
}

TEST_CASE("matmul variants agree with a naive triple loop") {
    RngStream rng(3, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m = 1 + rng.below(6), k = 1 + rng.below(6), n = 1 + rng.below(6);
        const Tensor a = oracle::random_tensor({m, k}, rng), b = oracle::random_tensor({k, n}, rng);
        Tensor ref({m, n});
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t p = 0; p < k; ++p) ref.at(i, j) += a.at(i, p) * b.at(p, j);
        CHECK(max_abs_diff(matmul(a, b), ref) < 1e-12);
        CHECK(max_abs_diff(matmul_nt(a, transpose(b)), ref) < 1e-12);
        CHECK(max_abs_diff(matmul_tn(transpose(a), b), ref) < 1e-12);
    }
}

TEST_CASE("softmax examples") {
    const Tensor u = softmax(Tensor::vector({0, 0, 0}), 0);
    for (double x : u.data()) CHECK_THAT(x, WithinAbs(1.0 / 3.0, 1e-15));

    const double c = 12.5;
    const Tensor big = softmax(Tensor::vector({c, c + 1000.0}), 0);
    CHECK(big.all_finite());
    CHECK_THAT(big[0], WithinAbs(0.0, 1e-300));
    CHECK_THAT(big[1], WithinAbs(1.0, 1e-15));

    const Tensor l = softmax(Tensor::vector({std::log(1.0), std::log(2.0), std::log(3.0)}), 0);
    CHECK_THAT(l[0], WithinAbs(1.0 / 6.0, 1e-15));
    CHECK_THAT(l[1], WithinAbs(2.0 / 6.0, 1e-15));
    CHECK_THAT(l[2], WithinAbs(3.0 / 6.0, 1e-15));
}

TEST_CASE("softmax sums to one and ignores constant shifts") {
    RngStream rng(5, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t r = 1 + rng.below(5), n = 1 + rng.below(8);
        Tensor x = oracle::random_tensor({r, n}, rng, 10.0);
        const std::size_t axis = rng.below(2);
        const Tensor y = softmax(x, axis);
        Tensor shifted = x;
        const double shift = rng.uniform(-50.0, 50.0);
        for (double& v : shifted.data()) v += shift;
        CHECK(max_abs_diff(softmax(shifted, axis), y) < 1e-12);
        if (axis == 1) {
            for (std::size_t i = 0; i < r; ++i) {
                double s = 0.0;
                for (double v : y.row(i)) {
                    CHECK(v >= 0.0);
                    s += v;
                }
                CHECK(std::abs(s - 1.0) < 1e-12);
            }
        } else {
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < r; ++i) s += y.at(i, j);
                CHECK(std::abs(s - 1.0) < 1e-12);
            }
        }
    }
    CHECK_THROWS_AS(softmax(Tensor({2, 2}), 2), DimensionError);
}

TEST_CASE("relu and sigmoid examples") {
    const Tensor r = relu(Tensor::vector({-1.0, 2.0}));
    CHECK(r[0] == 0.0);
    CHECK(r[1] == 2.0);
    CHECK(sigmoid(0.0) == 0.5);
    CHECK_THAT(sigmoid(std::log(3.0)), WithinAbs(0.75, 1e-15));
    CHECK(sigmoid(800.0) == 1.0);
    CHECK(sigmoid(-800.0) >= 0.0);
    CHECK(std::isfinite(sigmoid(-800.0)));
    CHECK_THAT(sigmoid(-30.0), WithinAbs(std::exp(-30.0) / (1.0 + std::exp(-30.0)), 1e-25));
}

TEST_CASE("finite_diff_grad examples") {
    const auto sq = [](const Tensor& x) {
        double s = 0.0;
        for (double v : x.data()) s += v * v;
        return s;
    };
    const Tensor g = finite_diff_grad(sq, Tensor::vector({1.0, 2.0}), 1e-5);
    CHECK_THAT(g[0], WithinAbs(2.0, 1e-6));
    CHECK_THAT(g[1], WithinAbs(4.0, 1e-6));

    const Tensor zero = finite_diff_grad([](const Tensor&) { return 7.0; }, Tensor::vector({1.0, -3.0, 2.0}), 1e-5);
    for (double v : zero.data()) CHECK(v == 0.0);

    const Tensor p = finite_diff_grad([](const Tensor& x) { return x[0] * x[1]; }, Tensor::vector({3.0, 5.0}), 1e-5);
    CHECK_THAT(p[0], WithinAbs(5.0, 1e-6));
    CHECK_THAT(p[1], WithinAbs(3.0, 1e-6));

    CHECK_THROWS_AS(finite_diff_grad([](const Tensor&) { return std::nan(""); }, Tensor::vector({1.0}), 1e-5),
                    NumericalError);
    CHECK_THROWS_AS(finite_diff_grad(sq, Tensor::vector({1.0}), 0.0), NumericalError);
}

TEST_CASE("backward passes match finite differences") {
    RngStream rng(11, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 1 + rng.below(4), k = 1 + rng.below(4), n = 1 + rng.below(4);
        const Tensor a = oracle::random_tensor({m, k}, rng), b = oracle::random_tensor({k, n}, rng);
        const Tensor w = oracle::random_tensor({m, n}, rng);
        const auto mg = matmul_backward(a, b, w);
        check_grad(mg.da, finite_diff_grad([&](const Tensor& x) { return sum_weighted(matmul(x, b), w); }, a, 1e-5));
        check_grad(mg.db, finite_diff_grad([&](const Tensor& x) { return sum_weighted(matmul(a, x), w); }, b, 1e-5));

        const std::size_t axis = rng.below(2);
        const Tensor sy = softmax(a, axis);
        const Tensor ws = oracle::random_tensor(a.shape(), rng);
        check_grad(softmax_backward(sy, ws, axis),
                   finite_diff_grad([&](const Tensor& x) { return sum_weighted(softmax(x, axis), ws); }, a, 1e-5));

        check_grad(sigmoid_backward(sigmoid(a), ws),
                   finite_diff_grad([&](const Tensor& x) { return sum_weighted(sigmoid(x), ws); }, a, 1e-5));
        check_grad(tanh_backward(molre::tanh(a), ws),
                   finite_diff_grad([&](const Tensor& x) { return sum_weighted(molre::tanh(x), ws); }, a, 1e-5));

        // Keep relu inputs away from the kink so central differences are exact.
        Tensor away = a;
        for (double& v : away.data()) v += v >= 0.0 ? 0.1 : -0.1;
        check_grad(relu_backward(away, ws),
                   finite_diff_grad([&](const Tensor& x) { return sum_weighted(relu(x), ws); }, away, 1e-5));
    }
}

TEST_CASE("rng replay and stream independence") {
    RngStream a(42, 7), b(42, 7), c(42, 8);
    std::vector<std::uint64_t> da, db, dc;
    for (int i = 0; i < 1000; ++i) {
        da.push_back(a.next_u64());
        db.push_back(b.next_u64());
        dc.push_back(c.next_u64());
    }
    CHECK(da == db);
    std::size_t same = 0;
    for (std::size_t i = 0; i < da.size(); ++i) same += da[i] == dc[i];
    CHECK(same == 0);

    // split depends only on the parent identity, not on how far it has been drawn.
    RngStream p(9, 1);
    const RngStream s1 = p.split(3);
    p.next_u64();
    RngStream s2 = p.split(3);
    RngStream s1c = s1;
    CHECK(s1c.next_u64() == s2.next_u64());
    CHECK(stream_key("epoch", 1) != stream_key("epoch", 2));
    CHECK(stream_key("epoch", 1) != stream_key("synth", 1));
}

TEST_CASE("rng distributions") {
    RngStream rng(123, 0);
    const int n = 100000;
    double su = 0.0, sn = 0.0, sn2 = 0.0;
    int heads = 0;
    std::set<std::uint64_t> seen;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        su += u;
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
        heads += rng.bernoulli(0.3) ? 1 : 0;
        const auto k = rng.below(10);
        REQUIRE(k < 10);
        seen.insert(k);
    }
    CHECK_THAT(su / n, WithinAbs(0.5, 0.005));
    CHECK_THAT(sn / n, WithinAbs(0.0, 0.015));
    CHECK_THAT(sn2 / n, WithinAbs(1.0, 0.02));
    CHECK_THAT(heads / static_cast<double>(n), WithinAbs(0.3, 0.0045));
    CHECK(seen.size() == 10);
}
