#pragma once

#include <cmath>
#include <cstdint>

namespace cloob {

/// PCG32 counter-based generator. Identical seed gives a bitwise-identical
/// stream on every platform. Standard-normal sampling uses Box-Muller with
/// a fixed pairing order (cos first, sin cached).
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t seq = 0xda3e39cb94b95bdbULL)
        : state_(0), inc_((seq << 1u) | 1u) {
        next_u32();
        state_ += seed;
        next_u32();
    }

    std::uint32_t next_u32() {
        std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
    }

    /// Uniform in [0, 1), 32-bit resolution.
    double next_double() {
        return next_u32() * (1.0 / 4294967296.0);
    }

    /// Uniform in (0, 1]; never returns 0 so it is safe under log.
    double next_double_open() {
        return (static_cast<double>(next_u32()) + 1.0) * (1.0 / 4294967296.0);
    }

    /// Box-Muller standard normal, fixed pairing order.
    double next_normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = next_double_open();
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

    /// Uniform integer in [0, bound) without modulo bias.
    std::uint32_t next_below(std::uint32_t bound) {
        std::uint32_t threshold = (-bound) % bound;
        for (;;) {
            std::uint32_t r = next_u32();
            if (r >= threshold) return r % bound;
        }
    }

private:
    std::uint64_t state_;
    std::uint64_t inc_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace cloob
