// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0

#include "molre/train/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "molre/core/errors.hpp"

namespace molre {

std::vector<double> class_repeat_factors(const Tensor& labels, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("repeat factor threshold must be in (0, 1]");
    if (labels.rank() != 2 || labels.rows() == 0) throw DimensionError("repeat_factors: need [N x C], N >= 1");
    const std::size_t N = labels.rows(), C = labels.cols();
    std::vector<double> r(C, 1.0);
    for (std::size_t c = 0; c < C; ++c) {
        double pos = 0.0;
        for (std::size_t n = 0; n < N; ++n) pos += labels.at(n, c) == 1.0;
        const double f = pos / static_cast<double>(N);
        // A class with no positives never contributes (no sample carries it).
        if (f > 0.0) r[c] = std::max(1.0, std::sqrt(threshold / f));
    }
    return r;
}

std::vector<double> repeat_factors(const Tensor& labels, double threshold) {
    const auto per_class = class_repeat_factors(labels, threshold);
    std::vector<double> r(labels.rows(), 1.0);
    for (std::size_t n = 0; n < labels.rows(); ++n)
        for (std::size_t c = 0; c < labels.cols(); ++c)
            if (labels.at(n, c) == 1.0) r[n] = std::max(r[n], per_class[c]);
    return r;
}

std::size_t sample_repeat_count(double factor, RngStream& rng) {
    const double whole = std::floor(factor);
    const double frac = factor - whole;
    return static_cast<std::size_t>(whole) + (rng.uniform() < frac ? 1 : 0);
}

std::vector<std::size_t> expand_indices(const std::vector<double>& factors, RngStream& rng) {
    std::vector<std::size_t> out;
    out.reserve(factors.size() * 2);
    for (std::size_t i = 0; i < factors.size(); ++i) {
        const std::size_t k = sample_repeat_count(factors[i], rng);
        out.insert(out.end(), k, i);
    }
    return out;
}

void shuffle_indices(std::vector<std::size_t>& indices, RngStream& rng) {
    for (std::size_t i = indices.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(indices[i - 1], indices[j]);
    }
}

}  // namespace molre
