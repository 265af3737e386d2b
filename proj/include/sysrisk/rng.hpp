#pragma once

#include <cstdint>

namespace sysrisk {

// 64-bit finalizer used both as the PRNG step and for seed derivation.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// splitmix64 generator. Small, fast, and fully portable: identical streams
/// on every platform, which the determinism-by-seed guarantees rely on.
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    constexpr double next_double() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    constexpr bool bernoulli(double p) noexcept { return next_double() < p; }

private:
    std::uint64_t state_;
};

/// Derives the seed for work item `index` from a root seed. Disjoint indices
/// give statistically independent streams; the derivation is stable so runs
/// are reproducible from (root_seed, index) alone.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) noexcept {
    return mix64(root ^ mix64(0x5851F42D4C957F2DULL * (index + 1)));
}

}  // namespace sysrisk
