//
// Copyright 2026 The Skylift Authors.
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace skylift {

/// Deterministic random source. The mt19937_64 engine is fully specified by
/// the standard; the floating-point transforms below are hand-rolled because
/// std::*_distribution output is implementation-defined and we promise
/// bit-identical runs for a fixed seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi], inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(uniform() * static_cast<double>(hi - lo + 1));
    }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

    /// Independent stream derived from the original seed and a salt. Children
    /// are stable under reordering, so per-route streams do not depend on the
    /// order (or thread) in which routes are processed.
    Rng derive(std::uint64_t salt) const {
        std::uint64_t z = seed_ ^ (salt + 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return Rng(z ^ (z >> 31));
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

}  // namespace skylift
