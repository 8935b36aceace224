#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "bfpa/fading.hpp"
#include "bfpa/longterm.hpp"
#include "bfpa/parallel.hpp"
#include "bfpa/powalloc.hpp"
#include "bfpa/profile.hpp"
#include "bfpa/types.hpp"

namespace bfpa {

/// Named allocation rule of an outage experiment.
struct SchemeSpec {
    enum class Kind {
        uniform,
        optimal,      // mercury/water-filling, short-term
        twf,          // truncated water-filling, short-term
        ref,          // refined truncated water-filling, short-term
        wf_gaussian,  // classical water-filling (Gaussian-input rule), outage on true MI
        lt_optimal,   // long-term policy over the optimal minimum-power rule
        lt_twf,
        lt_ref,
    };

    Kind kind = Kind::uniform;
    double cap_snr = 0.0;     // beta, linear; twf/ref kinds
    bool use_approx = false;  // lt_twf / lt_ref: exponential-fit level with rate margin

    bool is_long_term() const {
        return kind == Kind::lt_optimal || kind == Kind::lt_twf || kind == Kind::lt_ref;
    }
    bool needs_cap() const {
        return kind == Kind::twf || kind == Kind::ref || kind == Kind::lt_twf ||
               kind == Kind::lt_ref;
    }
    bool needs_ref_params() const { return kind == Kind::ref || kind == Kind::lt_ref; }

    static SchemeSpec uniform_scheme() { return {}; }
    static SchemeSpec optimal_st() { return {Kind::optimal}; }
    static SchemeSpec twf_scheme(double cap) { return {Kind::twf, cap}; }
    static SchemeSpec ref_scheme(double cap) { return {Kind::ref, cap}; }
    static SchemeSpec waterfilling_gaussian() { return {Kind::wf_gaussian}; }
    static SchemeSpec lt_optimal_scheme() { return {Kind::lt_optimal}; }
    static SchemeSpec lt_twf_scheme(double cap, bool approx = false) {
        return {Kind::lt_twf, cap, approx};
    }
    static SchemeSpec lt_ref_scheme(double cap, bool approx = false) {
        return {Kind::lt_ref, cap, approx};
    }

    std::string label() const {
        char buf[64];
        switch (kind) {
            case Kind::uniform: return "uniform";
            case Kind::optimal: return "optimal";
            case Kind::wf_gaussian: return "wf-gaussian";
            case Kind::twf:
                std::snprintf(buf, sizeof buf, "twf(beta=%g)", cap_snr);
                return buf;
            case Kind::ref:
                std::snprintf(buf, sizeof buf, "ref(beta=%g)", cap_snr);
                return buf;
            case Kind::lt_optimal: return "lt-optimal";
            case Kind::lt_twf:
                std::snprintf(buf, sizeof buf, "lt-twf(beta=%g)%s", cap_snr,
                              use_approx ? "+approx" : "");
                return buf;
            case Kind::lt_ref:
                std::snprintf(buf, sizeof buf, "lt-ref(beta=%g)%s", cap_snr,
                              use_approx ? "+approx" : "");
                return buf;
        }
        return "?";
    }
};

struct CurvePoint {
    double power_db = 0.0;
    double outage = 0.0;
    double ci95 = 0.0;  // half-width
    std::uint64_t samples = 0;
    double spent_power = std::numeric_limits<double>::quiet_NaN();  // long-term schemes only
};

struct OutageCurve {
    std::string scheme_label;
    double rate = 0.0;
    std::vector<CurvePoint> points;

    /// Long-term schemes only: per-point silence thresholds and the
    /// calibration-sample view of the zero-outage power.
    struct LtDiag {
        bool valid = false;
        std::vector<double> thresholds;
        double zero_outage_power = 0.0;  // empirical E[w]
        double tail_mass = 0.0;          // share of E[w] in the top 0.1% of w
    } lt;
};

struct SlopeFit {
    double exponent = 0.0;
    double db_lo = 0.0, db_hi = 0.0;
    double residual_rms = 0.0;
    int points_used = 0;
};

struct McOptions {
    std::uint64_t samples = 100000;
    std::uint64_t seed = 1;
    int workers = 1;
    std::uint64_t calib_samples = 100000;
};

/// Calibration streams are decoupled from evaluation streams so threshold
/// selection never sees the gains it is judged on.
inline std::uint64_t calibration_seed(std::uint64_t seed) {
    return seed ^ 0x9E3779B97F4A7C15ULL;
}

/// Per-codeword mutual information (1/B) sum I(p_b gain_b).
inline double instantaneous_mi(const MiProfile& profile, const PowerVector& power,
                               const GainVector& gains) {
    if (power.size() != gains.size())
        throw std::invalid_argument("instantaneous_mi: dimension mismatch");
    double s = 0.0;
    for (std::size_t b = 0; b < power.size(); ++b) s += profile.mi(power[b] * gains[b]);
    return s / static_cast<double>(power.size());
}

namespace detail {

inline double binomial_ci95(std::uint64_t hits, std::uint64_t n) {
    constexpr double z = 1.959963984540054;
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(hits) / nn;
    if (static_cast<double>(hits) < 30.0) {
        // Wilson half-width for sparse counts
        const double z2n = z * z / nn;
        return z * std::sqrt(p * (1.0 - p) / nn + z2n / (4.0 * nn)) / (1.0 + z2n);
    }
    return z * std::sqrt(p * (1.0 - p) / nn);
}

inline const MiProfile& gaussian_profile() {
    static const MiProfile g = MiProfile::gaussian_input();
    return g;
}

/// Context resolved once per experiment: which curves allocate, which
/// curve judges outage, and the parameter sets for the refined/approx
/// rules.
struct SchemeContext {
    const MiProfile* eval;
    const MiProfile* alloc;
    RefParams rp{};
    ApproxParams ap{};

    SchemeContext(const SchemeSpec& s, const MiProfile& profile) : eval(&profile), alloc(&profile) {
        if (s.kind == SchemeSpec::Kind::wf_gaussian) alloc = &gaussian_profile();
        if (s.needs_cap() && !(s.cap_snr > 0.0))
            throw std::invalid_argument("scheme " + s.label() + " needs a positive cap");
        if (s.needs_ref_params() || (s.use_approx && s.is_long_term())) {
            if (profile.is_gaussian_input())
                throw std::invalid_argument(
                    "refined/approx schemes need a discrete-input profile");
        }
        if (s.needs_ref_params()) rp = ref_params_for(profile.constellation_name(), profile.decoder());
        if (s.use_approx && s.is_long_term())
            ap = approx_params_for(profile.constellation_name(), profile.decoder());
    }
};

/// Short-term rate achieved by the scheme on one gain draw at power P.
inline double short_term_rate(const SchemeSpec& s, const SchemeContext& ctx,
                              const GainVector& g, double power, PowerVector& scratch) {
    switch (s.kind) {
        case SchemeSpec::Kind::uniform: {
            double r = 0.0;
            for (const double gb : g) r += ctx.eval->mi(power * gb);
            return r / static_cast<double>(g.size());
        }
        case SchemeSpec::Kind::optimal:
        case SchemeSpec::Kind::wf_gaussian:
            alloc_optimal_st_into(*ctx.alloc, g, power, scratch);
            break;
        case SchemeSpec::Kind::twf:
            alloc_twf_into(g, power, s.cap_snr, scratch);
            break;
        case SchemeSpec::Kind::ref:
            alloc_ref_into(g, power, ctx.rp, s.cap_snr, scratch);
            break;
        default:
            throw std::logic_error("short_term_rate: not a short-term scheme");
    }
    double r = 0.0;
    for (std::size_t b = 0; b < g.size(); ++b) r += ctx.eval->mi(scratch[b] * g[b]);
    return r / static_cast<double>(g.size());
}

/// Mean minimum power of the long-term inner rule on one gain draw.
inline double inner_mean_power(const SchemeSpec& s, const SchemeContext& ctx, double rate,
                               const GainVector& g, PowerVector& scratch) {
    switch (s.kind) {
        case SchemeSpec::Kind::lt_optimal:
            min_power_opt_into(*ctx.eval, g, rate, scratch);
            break;
        case SchemeSpec::Kind::lt_twf:
            if (s.use_approx)
                min_power_tw_margin_into(ctx.ap, ctx.eval->bits_per_symbol(), g, rate, s.cap_snr,
                                         scratch);
            else
                min_power_tw_into(*ctx.eval, g, rate, s.cap_snr, scratch);
            break;
        case SchemeSpec::Kind::lt_ref:
            if (s.use_approx)
                min_power_ref_margin_into(ctx.ap, ctx.rp, ctx.eval->bits_per_symbol(), g, rate,
                                          s.cap_snr, scratch);
            else
                min_power_ref_into(*ctx.eval, g, rate, ctx.rp, s.cap_snr, scratch);
            break;
        default:
            throw std::logic_error("inner_mean_power: not a long-term scheme");
    }
    return mean(scratch);
}

/// Up-front feasibility: the capped rules plateau at the cap's rate
/// independent of the gains.
inline void check_lt_feasible(const SchemeSpec& s, const SchemeContext& ctx, double rate) {
    if (s.kind == SchemeSpec::Kind::lt_optimal) {
        if (rate >= ctx.eval->max_rate())
            throw InfeasibleRate("rate at or above constellation limit");
        return;
    }
    const double plateau = s.use_approx
                               ? mi_approx(s.cap_snr, ctx.ap, ctx.eval->bits_per_symbol()) -
                                     ctx.ap.delta_r
                               : ctx.eval->mi(s.cap_snr);
    if (rate >= plateau - 1e-12)
        throw InfeasibleRate("rate " + std::to_string(rate) +
                             " exceeds the cap plateau of scheme " + s.label());
}

inline constexpr std::uint64_t kChunk = 1 << 14;

}  // namespace detail

/// Monte Carlo outage curve of a scheme at the given power grid (dB).
///
/// Gains come from counter-based streams indexed by sample, so results
/// are byte-identical for any worker count, and different schemes and
/// power points share the same gains (common random numbers). Long-term
/// schemes are calibrated per power point on an independent stream
/// before evaluation.
inline OutageCurve estimate_outage(const SchemeSpec& scheme, const FadingSpec& fading,
                                   const MiProfile& profile, double rate,
                                   const std::vector<double>& power_db, const McOptions& opt) {
    if (opt.samples < 1) throw std::invalid_argument("estimate_outage: need >= 1 sample");
    if (power_db.empty()) throw std::invalid_argument("estimate_outage: empty power grid");
    const detail::SchemeContext ctx(scheme, profile);
    const std::size_t npow = power_db.size();
    std::vector<double> power_lin(npow);
    for (std::size_t j = 0; j < npow; ++j) power_lin[j] = std::pow(10.0, power_db[j] / 10.0);

    const FadingSampler sampler(fading, opt.seed);
    const std::uint64_t n = opt.samples;
    const std::uint64_t nchunks = (n + detail::kChunk - 1) / detail::kChunk;

    OutageCurve curve;
    curve.scheme_label = scheme.label();
    curve.rate = rate;
    curve.points.resize(npow);

    std::vector<std::uint64_t> hits(nchunks * npow, 0);

    if (!scheme.is_long_term()) {
        parallel_for(nchunks, opt.workers, [&](std::size_t chunk) {
            GainVector g;
            PowerVector scratch;
            const std::uint64_t lo = chunk * detail::kChunk;
            const std::uint64_t hi = std::min<std::uint64_t>(lo + detail::kChunk, n);
            std::uint64_t* slot = &hits[chunk * npow];
            for (std::uint64_t i = lo; i < hi; ++i) {
                sampler.sample(i, g);
                for (std::size_t j = 0; j < npow; ++j)
                    if (detail::short_term_rate(scheme, ctx, g, power_lin[j], scratch) < rate)
                        ++slot[j];
            }
        });
        for (std::size_t j = 0; j < npow; ++j) {
            std::uint64_t total = 0;
            for (std::uint64_t c = 0; c < nchunks; ++c) total += hits[c * npow + j];
            curve.points[j] = {power_db[j], static_cast<double>(total) / static_cast<double>(n),
                               detail::binomial_ci95(total, n), n};
        }
        return curve;
    }

    // long-term: calibrate thresholds per power point, then evaluate the
    // transmit/silence policy on fresh streams
    detail::check_lt_feasible(scheme, ctx, rate);
    const FadingSampler cal_sampler(fading, calibration_seed(opt.seed));
    const std::uint64_t ncal = std::max<std::uint64_t>(1, opt.calib_samples);
    std::vector<double> w(ncal);
    parallel_for((ncal + detail::kChunk - 1) / detail::kChunk, opt.workers, [&](std::size_t chunk) {
        GainVector g;
        PowerVector scratch;
        const std::uint64_t lo = chunk * detail::kChunk;
        const std::uint64_t hi = std::min<std::uint64_t>(lo + detail::kChunk, ncal);
        for (std::uint64_t i = lo; i < hi; ++i) {
            cal_sampler.sample(i, g);
            w[i] = detail::inner_mean_power(scheme, ctx, rate, g, scratch);
        }
    });
    const CalibrationTable table(std::move(w));
    std::vector<double> thresholds(npow);
    for (std::size_t j = 0; j < npow; ++j) thresholds[j] = table.solve(power_lin[j]);
    curve.lt.valid = true;
    curve.lt.thresholds = thresholds;
    curve.lt.zero_outage_power = table.total_mean();
    curve.lt.tail_mass = table.tail_mass();

    std::vector<double> spent(nchunks * npow, 0.0);
    parallel_for(nchunks, opt.workers, [&](std::size_t chunk) {
        GainVector g;
        PowerVector scratch;
        const std::uint64_t lo = chunk * detail::kChunk;
        const std::uint64_t hi = std::min<std::uint64_t>(lo + detail::kChunk, n);
        std::uint64_t* slot = &hits[chunk * npow];
        double* sp = &spent[chunk * npow];
        for (std::uint64_t i = lo; i < hi; ++i) {
            sampler.sample(i, g);
            const double wi = detail::inner_mean_power(scheme, ctx, rate, g, scratch);
            for (std::size_t j = 0; j < npow; ++j) {
                if (wi > thresholds[j]) ++slot[j];
                else sp[j] += wi;
            }
        }
    });
    for (std::size_t j = 0; j < npow; ++j) {
        std::uint64_t total = 0;
        double spent_sum = 0.0;
        for (std::uint64_t c = 0; c < nchunks; ++c) {
            total += hits[c * npow + j];
            spent_sum += spent[c * npow + j];  // fixed chunk order: reduction is deterministic
        }
        curve.points[j] = {power_db[j], static_cast<double>(total) / static_cast<double>(n),
                           detail::binomial_ci95(total, n), n,
                           spent_sum / static_cast<double>(n)};
    }
    return curve;
}

/// Least-squares SNR exponent of log10(outage) against power_dB/10 inside
/// the window. Points below the Monte Carlo floor (fewer than 20 hits) or
/// with relative confidence worse than 20% are excluded.
inline SlopeFit fit_exponent(const OutageCurve& curve, double db_lo, double db_hi) {
    std::vector<double> xs, ys;
    for (const auto& pt : curve.points) {
        if (pt.power_db < db_lo || pt.power_db > db_hi) continue;
        if (pt.outage <= 0.0) continue;
        if (pt.outage * static_cast<double>(pt.samples) < 20.0) continue;
        if (pt.ci95 / pt.outage >= 0.2) continue;
        xs.push_back(pt.power_db / 10.0);
        ys.push_back(std::log10(pt.outage));
    }
    if (xs.size() < 3)
        throw std::runtime_error("fit_exponent: fewer than 3 valid points in window");
    const auto nn = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    const double icept = (sy - slope * sx) / nn;
    double rss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (icept + slope * xs[i]);
        rss += r * r;
    }
    SlopeFit fit;
    fit.exponent = -slope;
    fit.db_lo = db_lo;
    fit.db_hi = db_hi;
    fit.residual_rms = std::sqrt(rss / nn);
    fit.points_used = static_cast<int>(xs.size());
    return fit;
}

/// Power (dB) at which the curve crosses the target outage, log-linear
/// interpolation between bracketing points.
inline double crossing_db(const OutageCurve& curve, double target) {
    if (!(target > 0.0)) throw std::invalid_argument("crossing_db: target must be > 0");
    const auto& pts = curve.points;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double a = pts[i].outage, b = pts[i + 1].outage;
        if (a <= 0.0 || b <= 0.0) continue;
        if ((a - target) * (b - target) > 0.0) continue;
        if (a == b) return pts[i].power_db;
        const double t = (std::log10(target) - std::log10(a)) / (std::log10(b) - std::log10(a));
        return pts[i].power_db + t * (pts[i + 1].power_db - pts[i].power_db);
    }
    throw std::runtime_error("crossing_db: target outage not bracketed by curve " +
                             curve.scheme_label);
}

/// Horizontal dB gap between two curves at the target outage; positive
/// when curve B reaches the target at lower power than curve A.
inline double gain_at(const OutageCurve& a, const OutageCurve& b, double target) {
    return crossing_db(a, target) - crossing_db(b, target);
}

}  // namespace bfpa
