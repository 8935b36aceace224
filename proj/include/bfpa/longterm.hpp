#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bfpa/bisect.hpp"
#include "bfpa/fading.hpp"
#include "bfpa/powalloc.hpp"
#include "bfpa/profile.hpp"
#include "bfpa/types.hpp"

namespace bfpa {

/// Raised when a requested rate cannot be met by a capped scheme (the
/// per-block mutual information plateaus below the target).
class InfeasibleRate : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Minimum-mean-power allocation achieving per-codeword rate R with the
/// optimal (inverse-MMSE) rule. The returned allocation satisfies the
/// rate constraint with equality to 1e-8.
inline void min_power_opt_into(const MiProfile& profile, const GainVector& gains, double rate,
                               PowerVector& out) {
    detail::check_gains(gains);
    if (!(rate > 0.0)) throw std::invalid_argument("min_power_opt: rate must be > 0");
    if (rate >= profile.max_rate())
        throw InfeasibleRate("min_power_opt: rate at or above constellation limit");
    const std::size_t n = gains.size();
    out.resize(n);
    double ln_max = -1e300;
    for (std::size_t b = 0; b < n; ++b) {
        out[b] = std::log(gains[b]);  // scratch: ln(gain)
        ln_max = std::max(ln_max, out[b]);
    }
    const auto rate_at = [&](double u) {
        // the inverse-MMSE output is already the received SNR of block b
        double s = 0.0;
        for (std::size_t b = 0; b < n; ++b)
            s += profile.mi(profile.inv_mmse_ln(std::min(0.0, -u - out[b])));
        return s / static_cast<double>(n);
    };
    double lo = -ln_max;  // all blocks shut off
    double step = 1.0;
    double hi = lo + step;
    int guard = 0;
    while (rate_at(hi) < rate) {
        step *= 2.0;
        hi = lo + step;
        if (++guard > 60) throw std::runtime_error("min_power_opt: bracket failure");
    }
    const auto r = bisect_increasing(rate_at, lo, hi, rate, 1e-9, 300, /*prefer_high=*/true);
    if (std::abs(r.f - rate) > 1e-8)
        throw std::runtime_error("min_power_opt: water-level solve did not converge");
    for (std::size_t b = 0; b < n; ++b)
        out[b] = profile.inv_mmse_ln(std::min(0.0, -r.x - out[b])) / gains[b];
}

inline PowerVector min_power_opt(const MiProfile& profile, const GainVector& gains, double rate) {
    PowerVector wp;
    min_power_opt_into(profile, gains, rate, wp);
    return wp;
}

namespace detail {

inline double twf_block_power(double level, double gain, double cap_snr) {
    return std::min(cap_snr / gain, std::max(level - 1.0 / gain, 0.0));
}

/// Shared eta solve for the capped minimum-power rules: `block_power`
/// maps (level, gain) to the per-block power, `block_rate` maps received
/// SNR to the rate measure the constraint is written in.
template <typename BlockPower, typename BlockRate>
void min_power_capped(const GainVector& gains, double rate, double level_hi,
                      BlockPower&& block_power, BlockRate&& block_rate, PowerVector& out) {
    const std::size_t n = gains.size();
    const auto rate_at = [&](double level) {
        double s = 0.0;
        for (const double g : gains) s += block_rate(block_power(level, g) * g);
        return s / static_cast<double>(n);
    };
    const double plateau = rate_at(level_hi);
    if (rate >= plateau - 1e-12)
        throw InfeasibleRate("capped scheme cannot reach the requested rate");
    const auto r = bisect_increasing(rate_at, 0.0, level_hi, rate, 1e-9, 300,
                                     /*prefer_high=*/true);
    if (std::abs(r.f - rate) > 1e-8)
        throw std::runtime_error("capped min-power solve did not converge");
    out.resize(n);
    for (std::size_t b = 0; b < n; ++b) out[b] = block_power(r.x, gains[b]);
}

}  // namespace detail

/// Truncated water-filling minimum-power rule; the water level is chosen
/// on the true mutual information so the rate constraint genuinely holds.
inline void min_power_tw_into(const MiProfile& profile, const GainVector& gains, double rate,
                              double cap_snr, PowerVector& out) {
    detail::check_gains(gains);
    if (!(rate > 0.0)) throw std::invalid_argument("min_power_tw: rate must be > 0");
    if (!(cap_snr > 0.0)) throw std::invalid_argument("min_power_tw: cap must be > 0");
    double hi = 0.0;
    for (const double g : gains) hi = std::max(hi, (cap_snr + 1.0) / g);
    detail::min_power_capped(
        gains, rate, hi,
        [cap_snr](double level, double g) { return detail::twf_block_power(level, g, cap_snr); },
        [&profile](double snr) { return profile.mi(snr); }, out);
}

inline PowerVector min_power_tw(const MiProfile& profile, const GainVector& gains, double rate,
                                double cap_snr) {
    PowerVector wp;
    min_power_tw_into(profile, gains, rate, cap_snr, wp);
    return wp;
}

/// Refined truncated water-filling minimum-power rule (true-MI level).
inline void min_power_ref_into(const MiProfile& profile, const GainVector& gains, double rate,
                               const RefParams& rp, double cap_snr, PowerVector& out) {
    detail::check_gains(gains);
    detail::check_ref_params(rp, cap_snr);
    if (!(rate > 0.0)) throw std::invalid_argument("min_power_ref: rate must be > 0");
    double hi = 0.0;
    for (const double g : gains) hi = std::max(hi, cap_snr / (rp.slope * g));
    detail::min_power_capped(
        gains, rate, hi,
        [&rp, cap_snr](double level, double g) {
            return detail::ref_branch_power(level, g, rp, cap_snr);
        },
        [&profile](double snr) { return profile.mi(snr); }, out);
}

inline PowerVector min_power_ref(const MiProfile& profile, const GainVector& gains, double rate,
                                 const RefParams& rp, double cap_snr) {
    PowerVector wp;
    min_power_ref_into(profile, gains, rate, rp, cap_snr, wp);
    return wp;
}

/// Truncated water-filling with the level chosen on the exponential-fit
/// approximation at target R + delta_r; the margin guarantees the true
/// rate still meets R without ever consulting the tabulated curves.
inline void min_power_tw_margin_into(const ApproxParams& ap, int bits_per_symbol,
                                     const GainVector& gains, double rate, double cap_snr,
                                     PowerVector& out) {
    detail::check_gains(gains);
    if (!(rate > 0.0)) throw std::invalid_argument("min_power_tw_margin: rate must be > 0");
    if (!(cap_snr > 0.0)) throw std::invalid_argument("min_power_tw_margin: cap must be > 0");
    double hi = 0.0;
    for (const double g : gains) hi = std::max(hi, (cap_snr + 1.0) / g);
    detail::min_power_capped(
        gains, rate + ap.delta_r, hi,
        [cap_snr](double level, double g) { return detail::twf_block_power(level, g, cap_snr); },
        [&ap, bits_per_symbol](double snr) { return mi_approx(snr, ap, bits_per_symbol); }, out);
}

inline PowerVector min_power_tw_margin(const ApproxParams& ap, int bits_per_symbol,
                                       const GainVector& gains, double rate, double cap_snr) {
    PowerVector wp;
    min_power_tw_margin_into(ap, bits_per_symbol, gains, rate, cap_snr, wp);
    return wp;
}

inline void min_power_ref_margin_into(const ApproxParams& ap, const RefParams& rp,
                                      int bits_per_symbol, const GainVector& gains, double rate,
                                      double cap_snr, PowerVector& out) {
    detail::check_gains(gains);
    detail::check_ref_params(rp, cap_snr);
    if (!(rate > 0.0)) throw std::invalid_argument("min_power_ref_margin: rate must be > 0");
    double hi = 0.0;
    for (const double g : gains) hi = std::max(hi, cap_snr / (rp.slope * g));
    detail::min_power_capped(
        gains, rate + ap.delta_r, hi,
        [&rp, cap_snr](double level, double g) {
            return detail::ref_branch_power(level, g, rp, cap_snr);
        },
        [&ap, bits_per_symbol](double snr) { return mi_approx(snr, ap, bits_per_symbol); }, out);
}

inline PowerVector min_power_ref_margin(const ApproxParams& ap, const RefParams& rp,
                                        int bits_per_symbol, const GainVector& gains, double rate,
                                        double cap_snr) {
    PowerVector wp;
    min_power_ref_margin_into(ap, rp, bits_per_symbol, gains, rate, cap_snr, wp);
    return wp;
}

// ---------------------------------------------------------------------------
// Threshold calibration and the transmit/silence policy.
// ---------------------------------------------------------------------------

/// Empirical map from the silence threshold s to the long-term average
/// spent power, built from a sorted sample of per-codeword mean minimum
/// powers. Between order statistics the capped mean is interpolated
/// linearly, making the map continuous and exactly invertible.
class CalibrationTable {
public:
    explicit CalibrationTable(std::vector<double> mean_powers)
        : w_(std::move(mean_powers)) {
        if (w_.empty()) throw std::invalid_argument("calibration: empty sample");
        std::sort(w_.begin(), w_.end());
        prefix_.resize(w_.size() + 1);
        prefix_[0] = 0.0;
        for (std::size_t i = 0; i < w_.size(); ++i) prefix_[i + 1] = prefix_[i] + w_[i];
    }

    std::size_t size() const { return w_.size(); }
    const std::vector<double>& sorted_mean_powers() const { return w_; }

    /// Mean of w over the whole sample; the empirical zero-outage power.
    double total_mean() const { return prefix_.back() / static_cast<double>(w_.size()); }

    /// Fraction of total mean contributed by the top `fraction` of the
    /// sample; large values flag a heavy tail where the zero-outage power
    /// estimate is unstable.
    double tail_mass(double fraction = 1e-3) const {
        const auto n = w_.size();
        const auto k = std::min<std::size_t>(n, std::max<std::size_t>(1, static_cast<std::size_t>(
                                                    std::ceil(fraction * n))));
        return (prefix_[n] - prefix_[n - k]) / prefix_.back();
    }

    /// Empirical average spent power at threshold s, linear between order
    /// statistics.
    double capped_mean(double s) const {
        const auto n = w_.size();
        if (s <= 0.0) return 0.0;
        if (s >= w_.back()) return total_mean();
        if (s < w_.front()) return s / static_cast<double>(n);
        const auto it = std::upper_bound(w_.begin(), w_.end(), s);
        const std::size_t k = static_cast<std::size_t>(it - w_.begin());  // w_[k-1] <= s < w_[k]
        const double frac = (s - w_[k - 1]) / (w_[k] - w_[k - 1]);
        return (prefix_[k] + frac * w_[k]) / static_cast<double>(n);
    }

    /// Threshold with capped_mean(s) equal to the power budget, infinite
    /// when the whole sample is affordable.
    double solve(double power) const {
        if (!(power > 0.0)) throw std::invalid_argument("calibration: power must be > 0");
        if (total_mean() <= power) return std::numeric_limits<double>::infinity();
        const auto n = w_.size();
        // first order statistic whose inclusion exceeds the budget
        std::size_t lo = 0, hi = n;  // invariant: capped at w_[lo-1] <= P < at w_[hi-1]
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (prefix_[mid + 1] / static_cast<double>(n) <= power) lo = mid + 1;
            else hi = mid;
        }
        if (lo == 0) return power * static_cast<double>(n);  // within the first segment
        if (lo >= n) return w_.back();
        const double base = prefix_[lo] / static_cast<double>(n);
        const double frac = (power - base) * static_cast<double>(n) / w_[lo];
        return w_[lo - 1] + frac * (w_[lo] - w_[lo - 1]);
    }

    /// Audit export: quantiles of w, the solved threshold and the target.
    void export_csv(const std::filesystem::path& file, double threshold, double power) const;

private:
    std::vector<double> w_;
    std::vector<double> prefix_;
};

struct CalibrationResult {
    double threshold;
    CalibrationTable table;
};

/// Draws n_cal gain vectors from the calibration stream and solves for
/// the silence threshold matching the long-term power budget.
template <typename InnerAlloc>
CalibrationResult calibrate_threshold(InnerAlloc&& inner, const FadingSampler& fading,
                                      double power, std::uint64_t n_cal) {
    if (n_cal < 1) throw std::invalid_argument("calibrate_threshold: need >= 1 sample");
    std::vector<double> w(n_cal);
    GainVector g;
    for (std::uint64_t i = 0; i < n_cal; ++i) {
        fading.sample(i, g);
        w[i] = mean(inner(g));
    }
    CalibrationTable table(std::move(w));
    return {table.solve(power), std::move(table)};
}

struct LtDecision {
    PowerVector power;
    bool outage;
};

/// Transmit the minimum-power allocation when affordable, otherwise stay
/// silent for the whole codeword (declared outage, zero spent power).
template <typename InnerAlloc>
LtDecision lt_policy(InnerAlloc&& inner, double threshold, const GainVector& gains) {
    PowerVector wp = inner(gains);
    if (mean(wp) <= threshold) return {std::move(wp), false};
    return {PowerVector(gains.size(), 0.0), true};
}

/// Long-term SNR exponent from the short-term exponent of the underlying
/// scheme: infinite (zero-outage regime) above one, d/(1-d) below.
inline double long_term_exponent(double short_term_exponent) {
    if (!(short_term_exponent > 0.0))
        throw std::invalid_argument("long_term_exponent: exponent must be > 0");
    if (short_term_exponent == 1.0)
        throw std::invalid_argument("long_term_exponent: undefined at exponent 1");
    if (short_term_exponent > 1.0) return std::numeric_limits<double>::infinity();
    return short_term_exponent / (1.0 - short_term_exponent);
}

inline void CalibrationTable::export_csv(const std::filesystem::path& file, double threshold,
                                         double power) const {
    std::ofstream os(file);
    if (!os) throw std::runtime_error("cannot write calibration csv: " + file.string());
    os << "# threshold=" << threshold << " target_power=" << power
       << " samples=" << w_.size() << " total_mean=" << total_mean()
       << " tail_mass_0.1pct=" << tail_mass() << "\n";
    os << "quantile,mean_power\n";
    const double qs[] = {0.001, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99, 0.999, 1.0};
    for (const double q : qs) {
        const auto idx = std::min(w_.size() - 1,
                                  static_cast<std::size_t>(q * static_cast<double>(w_.size())));
        os << q << "," << w_[idx] << "\n";
    }
}

}  // namespace bfpa
