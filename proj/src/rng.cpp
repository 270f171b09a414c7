#include "silic/rng.hpp"

#include <cmath>

namespace silic {

std::uint64_t derive_seed(std::uint64_t base, std::string_view stream, std::uint64_t index) {
    // splitmix64 finalizer over (base, stream hash, index)
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : stream) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return mix(mix(mix(base) ^ h) ^ index);
}

double Rng::exponential() {
    double u = uniform();
    while (u == 0.0) u = uniform();
    return -std::log(u);
}

} // namespace silic
