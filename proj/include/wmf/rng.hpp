#pragma once

#include <cstdint>

namespace wmf {

// splitmix64: the project-wide deterministic PRNG. The exact update rule is a
// wire-level contract (green masks and plain sampling replay it), so we do not
// use std::mt19937 here.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_unit() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // uniform in [0, bound) via modulo; bias is irrelevant at our vocab sizes
    // and the modulo rule is part of the green-mask contract.
    std::uint64_t next_below(std::uint64_t bound) {
        return next() % bound;
    }

private:
    std::uint64_t state_;
};

} // namespace wmf
