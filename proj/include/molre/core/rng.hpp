// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0
//
// Counter-based random stream. Draw n of stream (seed, id) is a pure hash of
// (seed, id, n), so streams can be created per sample or per epoch and
// consumed in any order without affecting each other.

#pragma once

#include <cstdint>
#include <string_view>

namespace molre {

class RngStream {
public:
    RngStream() = default;
    RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t counter = 0);

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi);
    /// Standard normal via Box-Muller; consumes two draws.
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }
    bool bernoulli(double p);
    /// Uniform integer in [0, n), n > 0.
    std::uint64_t below(std::uint64_t n);

    /// Independent child stream keyed by (this stream id, child).
    RngStream split(std::uint64_t child) const;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }
    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t seed_ = 0;
    std::uint64_t stream_id_ = 0;
    std::uint64_t counter_ = 0;
    std::uint64_t key_ = 0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;
/// Stable stream id for a (tag, index) pair, e.g. ("augment", sample).
std::uint64_t stream_key(std::string_view tag, std::uint64_t index = 0) noexcept;

}  // namespace molre
