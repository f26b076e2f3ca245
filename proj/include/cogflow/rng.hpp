// Deterministic random numbers for tests and the seeded fit self-check.
// std::uniform_real_distribution's output stream is implementation-defined,
// so we map raw mt19937_64 draws to doubles ourselves; the resulting byte
// streams (and hence CSV artifacts) are identical across platforms.
#pragma once

#include <cstdint>
#include <random>

namespace cogflow {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace cogflow
