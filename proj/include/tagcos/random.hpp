#pragma once

#include <cstdint>
#include <optional>

namespace tagcos {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stateless keyed hash of a (seed, a, b) counter. Every random quantity in
/// the library is derived from one of these so results are reproducible
/// across platforms, runs and thread counts.
constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
    std::uint64_t h = mix64(seed ^ 0x5bd1e9955bd1e995ULL);
    h = mix64(h ^ a);
    return mix64(h ^ (b * 0xd6e8feb86659fd93ULL));
}

/// Sequential generator over counter_hash(seed, stream, i) for i = 0, 1, ...
/// The standard <random> distributions are implementation-defined, so the
/// uniform/normal transforms here are spelled out.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : seed_(seed), stream_(stream) {}

    std::uint64_t next_u64() noexcept { return counter_hash(seed_, stream_, counter_++); }

    // [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // (0, 1]
    double uniform_open_zero() noexcept { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n), n >= 1 (Lemire's multiply-shift with rejection).
    std::uint64_t below(std::uint64_t n) noexcept;

    double normal() noexcept;

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::optional<double> spare_;
};

}  // namespace tagcos
