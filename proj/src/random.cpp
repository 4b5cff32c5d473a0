#include "tagcos/random.hpp"

#include <cmath>
#include <numbers>

namespace tagcos {

std::uint64_t CounterRng::below(std::uint64_t n) noexcept {
    using u128 = unsigned __int128;
    std::uint64_t x = next_u64();
    u128 m = static_cast<u128>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            x = next_u64();
            m = static_cast<u128>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double CounterRng::normal() noexcept {
    if (spare_) {
        double v = *spare_;
        spare_.reset();
        return v;
    }
    // Box-Muller
    const double u1 = uniform_open_zero();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    return r * std::cos(theta);
}

}  // namespace tagcos
