#pragma once

#include <cstdint>
#include <limits>

namespace seqsparse {

// SplitMix64 finalizer (Steele, Lea, Flood). Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for the substream addressed by (base, a, b, c):
//   mix64(mix64(mix64(mix64(base) ^ a) ^ b) ^ c)
// Trials use (base_seed, trial, 0, 0); components use
// (instance_seed, component_key, step, 0). Pure integer arithmetic, so the
// derivation is identical on every platform.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                                    std::uint64_t c = 0) noexcept {
    return mix64(mix64(mix64(mix64(base) ^ a) ^ b) ^ c);
}

// SplitMix64 generator. Eight bytes of state, so a fresh stream per
// component and step costs nothing to create. Satisfies
// UniformRandomBitGenerator.
class Stream {
public:
    using result_type = std::uint64_t;

    constexpr explicit Stream(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1) with 53 random bits.
    constexpr double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

inline Stream substream(std::uint64_t seed, std::uint64_t key, std::uint64_t step = 0) noexcept {
    return Stream(derive_seed(seed, key, step));
}

}  // namespace seqsparse
