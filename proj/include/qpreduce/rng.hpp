#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace qpr {

// Seeded generator with hand-rolled distributions. std::uniform_real_distribution
// and friends are implementation-defined, which would break the byte-identical
// output guarantee of the CLI, so we draw from the raw mt19937_64 stream only.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // uniform in [0,1)
    double unit() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    // inclusive bounds
    long long integer(long long lo, long long hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<long long>(engine_() % span);
    }

    double normal() {
        // Box-Muller; one value per call keeps the stream position deterministic.
        double u1 = unit(), u2 = unit();
        while (u1 <= 0.0) u1 = unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    bool coin(double p = 0.5) { return unit() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace qpr
