#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace silic {

/// Seed for a named sub-stream, e.g. derive_seed(seed, "agent", i).
std::uint64_t derive_seed(std::uint64_t base, std::string_view stream, std::uint64_t index = 0);

/// mt19937_64 with portable uniform draws (the std distributions are not
/// specified bit-for-bit across standard libraries).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Exp(1) draw.
    double exponential();

private:
    std::mt19937_64 engine_;
};

} // namespace silic
