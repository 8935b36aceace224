#pragma once

#include <cmath>
#include <cstdint>

namespace bfpa {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
}  // namespace detail

/// Counter-based random stream: the state is a pure function of
/// (seed, stream index), so draws do not depend on how sample indices are
/// partitioned across workers. Core generator is splitmix64.
class StreamRng {
public:
    StreamRng(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t s = seed;
        const std::uint64_t a = detail::splitmix64(s);
        s = stream ^ 0xD1B54A32D192ED03ULL;
        const std::uint64_t b = detail::splitmix64(s);
        state_ = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
        (void)next_u64();  // decorrelate nearby stream ids
    }

    std::uint64_t next_u64() { return detail::splitmix64(state_); }

    /// Uniform on (0, 1].
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal (Box-Muller, spare cached).
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_unit();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Gamma(shape, unit rate) by Marsaglia-Tsang, boosted for shape < 1.
    double next_gamma(double shape) {
        if (shape < 1.0) {
            const double u = next_unit();
            return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = next_normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = next_unit();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

private:
    std::uint64_t state_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace bfpa
