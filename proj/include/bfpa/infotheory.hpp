#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "bfpa/constellation.hpp"
#include "bfpa/gauss_hermite.hpp"
#include "bfpa/rng.hpp"

namespace bfpa {

inline constexpr double kLn2 = std::numbers::ln2;

namespace detail {

// Pairwise difference terms for one transmitted symbol at a given SNR:
// the exponent of candidate x' given noise z is
//   -|sqrt(rho) (x - x') + z|^2 + |z|^2 = -(a + br*zr + bi*zi).
struct PairTerms {
    std::vector<double> a, br, bi;
};

inline void fill_pair_terms(const Constellation& c, int tx, double snr, PairTerms& t) {
    const int n = c.size();
    t.a.resize(n);
    t.br.resize(n);
    t.bi.resize(n);
    const double sr = std::sqrt(snr);
    for (int j = 0; j < n; ++j) {
        const std::complex<double> d = c.points[tx] - c.points[j];
        t.a[j] = snr * std::norm(d);
        t.br[j] = 2.0 * sr * d.real();
        t.bi[j] = 2.0 * sr * d.imag();
    }
}

// log(sum_j exp(g_j)) with g_j = -(a_j + br_j*zr + bi_j*zi), stable.
inline double logsumexp_terms(const PairTerms& t, double zr, double zi) {
    const int n = static_cast<int>(t.a.size());
    double gmax = -1e300;
    for (int j = 0; j < n; ++j) {
        const double g = -(t.a[j] + t.br[j] * zr + t.bi[j] * zi);
        if (g > gmax) gmax = g;
    }
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
        const double g = -(t.a[j] + t.br[j] * zr + t.bi[j] * zi);
        s += std::exp(g - gmax);
    }
    return gmax + std::log(s);
}

}  // namespace detail

/// Coded-modulation mutual information of an AWGN channel with input
/// constellation `c` at SNR `snr`, in bits per symbol. Evaluated by 2-D
/// Gauss-Hermite quadrature over the complex noise.
inline double mi_cm(const Constellation& c, double snr,
                    const GaussHermite& q = default_quadrature()) {
    if (snr < 0.0) throw std::invalid_argument("mi_cm: snr must be >= 0");
    if (snr == 0.0) return 0.0;
    const int n = c.size();
    const int m = c.bits_per_symbol;
    const int nq = static_cast<int>(q.node.size());
    detail::PairTerms t;
    double acc = 0.0;
    for (int tx = 0; tx < n; ++tx) {
        detail::fill_pair_terms(c, tx, snr, t);
        double e = 0.0;
        for (int iz = 0; iz < nq; ++iz) {
            const double zr = q.node[iz];
            const double wr = q.weight[iz];
            double row = 0.0;
            for (int jz = 0; jz < nq; ++jz)
                row += q.weight[jz] * detail::logsumexp_terms(t, zr, q.node[jz]);
            e += wr * row;
        }
        acc += e;
    }
    const double inv_pi = 1.0 / std::numbers::pi;
    const double val = m - inv_pi * acc / (kLn2 * n);
    return std::min(std::max(val, 0.0), static_cast<double>(m));
}

/// MMSE of estimating the constellation symbol from y = sqrt(snr) x + z,
/// z circularly symmetric unit-variance Gaussian. Computed as the
/// expectation over (x, z) of the posterior-mean error, by the same
/// Gauss-Hermite rule as mi_cm.
inline double mmse_cm(const Constellation& c, double snr,
                      const GaussHermite& q = default_quadrature()) {
    if (snr < 0.0) throw std::invalid_argument("mmse_cm: snr must be >= 0");
    const int n = c.size();
    const int nq = static_cast<int>(q.node.size());
    detail::PairTerms t;
    std::vector<double> g(n);
    double acc = 0.0;
    for (int tx = 0; tx < n; ++tx) {
        detail::fill_pair_terms(c, tx, snr, t);
        double e = 0.0;
        for (int iz = 0; iz < nq; ++iz) {
            const double zr = q.node[iz];
            for (int jz = 0; jz < nq; ++jz) {
                const double zi = q.node[jz];
                double gmax = -1e300;
                for (int j = 0; j < n; ++j) {
                    g[j] = -(t.a[j] + t.br[j] * zr + t.bi[j] * zi);
                    if (g[j] > gmax) gmax = g[j];
                }
                double den = 0.0, numr = 0.0, numi = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double w = std::exp(g[j] - gmax);
                    den += w;
                    numr += w * c.points[j].real();
                    numi += w * c.points[j].imag();
                }
                const double er = c.points[tx].real() - numr / den;
                const double ei = c.points[tx].imag() - numi / den;
                e += q.weight[iz] * q.weight[jz] * (er * er + ei * ei);
            }
        }
        acc += e;
    }
    const double val = acc / (std::numbers::pi * n);
    return std::min(std::max(val, 0.0), 1.0);
}

/// BICM mutual information with the classical non-iterative decoder: the
/// sum of the M binary labeling-position subchannel rates. Gray labeling
/// is assumed to come with the constellation.
inline double mi_bicm(const Constellation& c, double snr,
                      const GaussHermite& q = default_quadrature()) {
    if (snr < 0.0) throw std::invalid_argument("mi_bicm: snr must be >= 0");
    if (snr == 0.0) return 0.0;
    const int n = c.size();
    const int m = c.bits_per_symbol;
    const int nq = static_cast<int>(q.node.size());
    const BitPartition part = bit_partition(c);
    detail::PairTerms t;
    std::vector<double> g(n);
    double acc = 0.0;
    for (int tx = 0; tx < n; ++tx) {
        detail::fill_pair_terms(c, tx, snr, t);
        double e = 0.0;
        for (int iz = 0; iz < nq; ++iz) {
            const double zr = q.node[iz];
            for (int jz = 0; jz < nq; ++jz) {
                const double zi = q.node[jz];
                double gmax = -1e300;
                for (int j = 0; j < n; ++j) {
                    g[j] = -(t.a[j] + t.br[j] * zr + t.bi[j] * zi);
                    if (g[j] > gmax) gmax = g[j];
                }
                double all = 0.0;
                for (int j = 0; j < n; ++j) all = all + std::exp(g[j] - gmax);
                const double log_all = gmax + std::log(all);
                double term = 0.0;
                for (int j = 1; j <= m; ++j) {
                    const auto& sub = part.sets[j - 1][c.bit_at(tx, j)];
                    double smax = -1e300;
                    for (const int k : sub)
                        if (g[k] > smax) smax = g[k];
                    double s = 0.0;
                    for (const int k : sub) s += std::exp(g[k] - smax);
                    term += log_all - (smax + std::log(s));
                }
                e += q.weight[iz] * q.weight[jz] * term;
            }
        }
        acc += e;
    }
    const double inv_pi = 1.0 / std::numbers::pi;
    const double val = m - inv_pi * acc / (kLn2 * n);
    return std::min(std::max(val, 0.0), static_cast<double>(m));
}

/// Monte Carlo estimate of mi_cm / mi_bicm with independent noise draws.
/// Returns {estimate, standard error}; test oracle, not a fast path.
struct MiMcEstimate {
    double value;
    double stderr_;
};

inline MiMcEstimate mi_cm_mc(const Constellation& c, double snr, std::uint64_t n_draws,
                             std::uint64_t seed) {
    const int n = c.size();
    const int m = c.bits_per_symbol;
    detail::PairTerms t;
    double sum = 0.0, sum2 = 0.0;
    StreamRng rng(seed, 0x6D69636D);  // one long stream is fine for an oracle
    const double half = std::sqrt(0.5);
    for (std::uint64_t i = 0; i < n_draws; ++i) {
        const int tx = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n));
        detail::fill_pair_terms(c, tx, snr, t);
        const double zr = half * rng.next_normal();
        const double zi = half * rng.next_normal();
        const double v = detail::logsumexp_terms(t, zr, zi) / kLn2;
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / static_cast<double>(n_draws);
    const double var = std::max(0.0, sum2 / static_cast<double>(n_draws) - mean * mean);
    return {m - mean, std::sqrt(var / static_cast<double>(n_draws))};
}

inline MiMcEstimate mi_bicm_mc(const Constellation& c, double snr, std::uint64_t n_draws,
                               std::uint64_t seed) {
    const int n = c.size();
    const int m = c.bits_per_symbol;
    const BitPartition part = bit_partition(c);
    detail::PairTerms t;
    std::vector<double> g(n);
    double sum = 0.0, sum2 = 0.0;
    StreamRng rng(seed, 0x6269636D);
    const double half = std::sqrt(0.5);
    for (std::uint64_t i = 0; i < n_draws; ++i) {
        const int tx = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n));
        detail::fill_pair_terms(c, tx, snr, t);
        const double zr = half * rng.next_normal();
        const double zi = half * rng.next_normal();
        double gmax = -1e300;
        for (int j = 0; j < n; ++j) {
            g[j] = -(t.a[j] + t.br[j] * zr + t.bi[j] * zi);
            if (g[j] > gmax) gmax = g[j];
        }
        double all = 0.0;
        for (int j = 0; j < n; ++j) all += std::exp(g[j] - gmax);
        const double log_all = gmax + std::log(all);
        double v = 0.0;
        for (int j = 1; j <= m; ++j) {
            const auto& sub = part.sets[j - 1][c.bit_at(tx, j)];
            double smax = -1e300;
            for (const int k : sub)
                if (g[k] > smax) smax = g[k];
            double s = 0.0;
            for (const int k : sub) s += std::exp(g[k] - smax);
            v += log_all - (smax + std::log(s));
        }
        v /= kLn2;
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / static_cast<double>(n_draws);
    const double var = std::max(0.0, sum2 / static_cast<double>(n_draws) - mean * mean);
    return {m - mean, std::sqrt(var / static_cast<double>(n_draws))};
}

// ---------------------------------------------------------------------------
// Analytic mutual-information surrogates used by the sub-optimal allocators.
// ---------------------------------------------------------------------------

/// Parameters of the refined piecewise bound: log2(1+rho) up to the knee,
/// then the tangent slope*log2(rho)+intercept, constant above the cap.
struct RefParams {
    double tangent_snr;  // where the middle branch touches the true curve
    double slope;        // kappa, in (0,1)
    double intercept;    // a
    double knee_snr;     // alpha, branch switch point
};

/// Exponential-fit approximation M (1 - exp(-c1 rho^c2))^c3 and its
/// worst-case overshoot above the true curve.
struct ApproxParams {
    double c1, c2, c3;
    double delta_r;  // max over rho of (fit - true MI), bits
};

enum class Decoder { cm, bicm };

inline std::string decoder_name(Decoder d) { return d == Decoder::cm ? "cm" : "bicm"; }

/// Built-in refined-bound parameter sets per (constellation, decoder).
inline RefParams ref_params_for(const std::string& constellation, Decoder dec) {
    const bool cm = (dec == Decoder::cm);
    if (constellation == "qpsk") return {3.0, 0.3528, 1.1327, 1.585};
    if (constellation == "8psk")
        return cm ? RefParams{7.0, 0.4693, 1.1397, 2.1677} : RefParams{7.0, 0.4744, 1.1234, 2.0922};
    if (constellation == "16qam")
        return cm ? RefParams{15.0, 0.56, 1.347, 5.8884} : RefParams{15.0, 0.5608, 1.3452, 5.8264};
    if (constellation == "64qam")
        return cm ? RefParams{63.0, 0.6581, 1.5255, 18.954} : RefParams{63.0, 0.6460, 1.5978, 19.8884};
    throw std::invalid_argument("no refined-bound parameters for " + constellation);
}

/// Built-in exponential-fit parameter sets per (constellation, decoder).
inline ApproxParams approx_params_for(const std::string& constellation, Decoder dec) {
    const bool cm = (dec == Decoder::cm);
    if (constellation == "qpsk") return {0.77, 0.87, 1.16, 0.0033};
    if (constellation == "8psk")
        return cm ? ApproxParams{0.61, 0.68, 1.45, 0.0241} : ApproxParams{0.81, 0.06, 1.75, 0.0223};
    if (constellation == "16qam")
        return cm ? ApproxParams{0.48, 0.61, 1.48, 0.0414} : ApproxParams{0.59, 0.06, 1.65, 0.0259};
    if (constellation == "64qam")
        return cm ? ApproxParams{0.47, 0.44, 1.87, 0.0977} : ApproxParams{0.40, 0.05, 1.63, 0.0656};
    throw std::invalid_argument("no approximation parameters for " + constellation);
}

/// Truncated log2(1+rho) bound: the water-filling surrogate capped at the
/// design SNR `cap_snr`.
inline double tw_bound(double snr, double cap_snr) {
    if (cap_snr <= 0.0) throw std::invalid_argument("tw_bound: cap must be > 0");
    if (snr < 0.0) throw std::invalid_argument("tw_bound: snr must be >= 0");
    return std::log2(1.0 + std::min(snr, cap_snr));
}

/// Refined three-branch bound; continuous at the knee and constant above
/// the cap. Requires cap_snr >= knee_snr.
inline double ref_bound(double snr, const RefParams& rp, double cap_snr) {
    if (cap_snr < rp.knee_snr) throw std::invalid_argument("ref_bound: cap must be >= knee");
    if (snr < 0.0) throw std::invalid_argument("ref_bound: snr must be >= 0");
    if (snr <= rp.knee_snr) return std::log2(1.0 + snr);
    if (snr <= cap_snr) return rp.slope * std::log2(snr) + rp.intercept;
    return rp.slope * std::log2(cap_snr) + rp.intercept;
}

/// Exponential-fit approximation of the mutual information curve.
inline double mi_approx(double snr, const ApproxParams& ap, int bits_per_symbol) {
    if (snr < 0.0) throw std::invalid_argument("mi_approx: snr must be >= 0");
    if (snr == 0.0) return 0.0;
    const double inner = 1.0 - std::exp(-ap.c1 * std::pow(snr, ap.c2));
    return bits_per_symbol * std::pow(inner, ap.c3);
}

}  // namespace bfpa
