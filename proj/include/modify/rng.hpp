#pragma once

#include <cstdint>
#include <random>

namespace modify {

// Deterministic RNG with hand-rolled distributions. std::mt19937_64 is fully
// specified by the standard, but the std distributions are not guaranteed to
// produce the same sequences across library implementations, so uniforms are
// generated here directly from raw 64-bit words.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

private:
    std::mt19937_64 engine_;
};

// SplitMix64 step, used to fold words into derived stream seeds.
inline std::uint64_t mix_seed(std::uint64_t state, std::uint64_t word) {
    std::uint64_t z = state + 0x9e3779b97f4a7c15ULL + word;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Labels for the per-purpose RNG streams derived from the master seed.
// Keeping streams separate means toggling one mechanism (e.g. the loss gate)
// cannot shift the random draws consumed by another (e.g. augmentation).
namespace stream {
inline constexpr std::uint64_t dataset = 0xDA7A5E7ULL;
inline constexpr std::uint64_t init = 0x1A171ULL;
inline constexpr std::uint64_t order = 0x0EDE2ULL;
inline constexpr std::uint64_t augment = 0xA6ULL;
}  // namespace stream

}  // namespace modify
