// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// Repeat factor sampling for long-tailed multi-label data.
//
//   class:  r(c) = max(1, sqrt(t / f(c)))   f(c) = fraction of samples positive for c
//   sample: r(i) = max over positive classes of r(c), 1 when no class is positive
//
// Each epoch a sample is repeated floor(r) times plus once more with
// probability r - floor(r).

#pragma once

#include <cstddef>
#include <vector>

#include "molre/core/rng.hpp"
#include "molre/core/tensor.hpp"

namespace molre {

std::vector<double> class_repeat_factors(const Tensor& labels, double threshold);
std::vector<double> repeat_factors(const Tensor& labels, double threshold);

/// Stochastic rounding of one repeat factor.
std::size_t sample_repeat_count(double factor, RngStream& rng);
/// Expanded index list, sample i appearing sample_repeat_count(r_i) times.
std::vector<std::size_t> expand_indices(const std::vector<double>& factors, RngStream& rng);
/// Fisher-Yates with the portable stream (std::shuffle is not reproducible across libraries).
void shuffle_indices(std::vector<std::size_t>& indices, RngStream& rng);

}  // namespace molre
