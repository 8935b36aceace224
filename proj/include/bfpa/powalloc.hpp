#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bfpa/bisect.hpp"
#include "bfpa/profile.hpp"
#include "bfpa/types.hpp"

namespace bfpa {

namespace detail {

inline void check_gains(const GainVector& gains) {
    if (gains.empty()) throw std::invalid_argument("empty gain vector");
    for (const double g : gains)
        if (!(g > 0.0) || !std::isfinite(g))
            throw std::invalid_argument("gains must be positive and finite");
}

inline void check_ref_params(const RefParams& rp, double cap_snr) {
    if (!(rp.slope > 0.0 && rp.slope < 1.0))
        throw std::invalid_argument("refined bound: slope must be in (0,1)");
    if (!(rp.knee_snr * (1.0 - rp.slope) >= rp.slope))
        throw std::invalid_argument("refined bound: branch thresholds out of order");
    if (!(cap_snr >= rp.knee_snr))
        throw std::invalid_argument("refined bound: cap must be >= knee");
}

/// Per-block refined-scheme power at water level `level`.
inline double ref_branch_power(double level, double gain, const RefParams& rp, double cap_snr) {
    if (level >= cap_snr / (rp.slope * gain)) return cap_snr / gain;
    if (level >= rp.knee_snr / (rp.slope * gain)) return rp.slope * level;
    if (level >= (rp.knee_snr + 1.0) / gain) return rp.knee_snr / gain;
    if (level >= 1.0 / gain) return level - 1.0 / gain;
    return 0.0;
}

}  // namespace detail

/// Same power on every block.
inline PowerVector alloc_uniform(int blocks, double power) {
    if (blocks < 1) throw std::invalid_argument("alloc_uniform: need >= 1 block");
    if (power < 0.0) throw std::invalid_argument("alloc_uniform: power must be >= 0");
    return PowerVector(static_cast<std::size_t>(blocks), power);
}

/// Mercury/water-filling: maximizes the per-codeword mutual information
/// under the short-term mean-power constraint. Each block receives
/// inverse-MMSE power against a common water level; blocks whose gain is
/// below the level get exactly zero. The level search runs in log domain
/// so arbitrarily deep saturation stays representable.
inline void alloc_optimal_st_into(const MiProfile& profile, const GainVector& gains, double power,
                                  PowerVector& out) {
    detail::check_gains(gains);
    if (power < 0.0) throw std::invalid_argument("alloc_optimal_st: power must be >= 0");
    const std::size_t n = gains.size();
    out.assign(n, 0.0);
    if (power == 0.0) return;

    double ln_max = -1e300;
    for (std::size_t b = 0; b < n; ++b) {
        out[b] = std::log(gains[b]);  // reuse as scratch for ln(gain)
        ln_max = std::max(ln_max, out[b]);
    }
    const auto power_at = [&](double u) {
        double s = 0.0;
        for (std::size_t b = 0; b < n; ++b)
            s += profile.inv_mmse_ln(std::min(0.0, u - out[b])) / gains[b];
        return s / static_cast<double>(n);
    };

    // power is nonincreasing in u = ln(level); bracket downward from the
    // zero-power point
    double hi = ln_max;
    double step = 1.0;
    double lo = hi - step;
    int guard = 0;
    while (power_at(lo) < power) {
        step *= 2.0;
        lo = hi - step;
        if (++guard > 60) throw std::runtime_error("alloc_optimal_st: bracket failure");
    }
    const double tol = 1e-10 * power;
    double u = lo;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double pm = power_at(mid);
        if (std::abs(pm - power) <= tol) {
            u = mid;
            break;
        }
        if (pm > power) lo = mid;
        else hi = mid;
        u = hi;  // side with mean power <= constraint
    }
    for (std::size_t b = 0; b < n; ++b)
        out[b] = profile.inv_mmse_ln(std::min(0.0, u - out[b])) / gains[b];
}

inline PowerVector alloc_optimal_st(const MiProfile& profile, const GainVector& gains,
                                    double power) {
    PowerVector p;
    alloc_optimal_st_into(profile, gains, power, p);
    return p;
}

/// Truncated water-filling: water-filling capped at cap_snr/gain per
/// block. If every block can afford its cap the constraint is slack and
/// the capped allocation is returned outright.
inline void alloc_twf_into(const GainVector& gains, double power, double cap_snr,
                           PowerVector& out) {
    detail::check_gains(gains);
    if (!(cap_snr > 0.0)) throw std::invalid_argument("alloc_twf: cap must be > 0");
    if (power < 0.0) throw std::invalid_argument("alloc_twf: power must be >= 0");
    const std::size_t n = gains.size();
    out.resize(n);
    double capped_mean = 0.0;
    double hi = 0.0;
    for (const double g : gains) {
        capped_mean += cap_snr / g;
        hi = std::max(hi, (cap_snr + 1.0) / g);
    }
    capped_mean /= static_cast<double>(n);
    if (capped_mean <= power) {
        for (std::size_t b = 0; b < n; ++b) out[b] = cap_snr / gains[b];
        return;
    }
    const auto power_at = [&](double level) {
        double s = 0.0;
        for (const double g : gains)
            s += std::min(cap_snr / g, std::max(level - 1.0 / g, 0.0));
        return s / static_cast<double>(n);
    };
    const auto r = bisect_increasing(power_at, 0.0, hi, power, 1e-10 * std::max(power, 1e-8), 300);
    for (std::size_t b = 0; b < n; ++b)
        out[b] = std::min(cap_snr / gains[b], std::max(r.x - 1.0 / gains[b], 0.0));
}

inline PowerVector alloc_twf(const MiProfile& profile, const GainVector& gains, double power,
                             double cap_snr) {
    (void)profile;  // the rule itself never consults the MI curves
    PowerVector p;
    alloc_twf_into(gains, power, cap_snr, p);
    return p;
}

/// Refined truncated water-filling: water-filling up to the knee, a
/// constant-power middle regime along the tangent branch, capped at
/// cap_snr/gain.
inline void alloc_ref_into(const GainVector& gains, double power, const RefParams& rp,
                           double cap_snr, PowerVector& out) {
    detail::check_gains(gains);
    detail::check_ref_params(rp, cap_snr);
    if (power < 0.0) throw std::invalid_argument("alloc_ref: power must be >= 0");
    const std::size_t n = gains.size();
    out.resize(n);
    double capped_mean = 0.0;
    double hi = 0.0;
    for (const double g : gains) {
        capped_mean += cap_snr / g;
        hi = std::max(hi, cap_snr / (rp.slope * g));
    }
    capped_mean /= static_cast<double>(n);
    if (capped_mean < power) {
        for (std::size_t b = 0; b < n; ++b) out[b] = cap_snr / gains[b];
        return;
    }
    const auto power_at = [&](double level) {
        double s = 0.0;
        for (const double g : gains) s += detail::ref_branch_power(level, g, rp, cap_snr);
        return s / static_cast<double>(n);
    };
    const auto r = bisect_increasing(power_at, 0.0, hi, power, 1e-10 * std::max(power, 1e-8), 300);
    for (std::size_t b = 0; b < n; ++b)
        out[b] = detail::ref_branch_power(r.x, gains[b], rp, cap_snr);
}

inline PowerVector alloc_ref(const MiProfile& profile, const GainVector& gains, double power,
                             const RefParams& rp, double cap_snr) {
    (void)profile;
    PowerVector p;
    alloc_ref_into(gains, power, rp, cap_snr, p);
    return p;
}

/// Singleton bound on the outage diversity of rate-R coded modulation
/// over B blocks with 2^M-ary input.
inline int singleton_bound(int blocks, int bits_per_symbol, double rate) {
    if (!(rate > 0.0) || rate > bits_per_symbol)
        throw std::invalid_argument("singleton_bound: need 0 < R <= M");
    const double t = blocks * (1.0 - rate / bits_per_symbol);
    return 1 + static_cast<int>(std::floor(t + 1e-12));
}

/// Diversity upper bound of the truncated scheme at cap beta; when the
/// rate exceeds the cap's per-block mutual information the scheme cannot
/// reach it on any single block, which is reported instead of a silent 0.
struct DiversityBound {
    int order;
    bool rate_reachable;
};

inline DiversityBound cap_diversity(const MiProfile& profile, int blocks, double rate,
                                    double cap_snr) {
    if (!(rate > 0.0)) throw std::invalid_argument("cap_diversity: rate must be > 0");
    const double cap_mi = profile.mi(cap_snr);
    if (!(cap_mi > 0.0)) throw std::invalid_argument("cap_diversity: cap gives zero rate");
    if (rate > cap_mi) return {0, false};
    // snap absorbs tabulation error when the cap sits exactly at the
    // equality case of the diversity condition
    const double t = blocks * (1.0 - rate / cap_mi);
    return {1 + static_cast<int>(std::floor(t + 1e-6)), true};
}

}  // namespace bfpa
