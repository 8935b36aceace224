#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "bfpa/rng.hpp"
#include "bfpa/types.hpp"

namespace bfpa {

/// Exact zeros from floating underflow are clamped here so 1/gain stays
/// finite; the continuous fading laws hit zero with probability zero.
inline constexpr double kMinGain = 1e-300;

/// I.i.d. Nakagami-m blocks; the power gain of each block is
/// Gamma(shape m, rate m), which has unit mean.
struct NakagamiSpec {
    double shape = 1.0;  // m >= 0.5
    int blocks = 1;
};

inline GainVector sample_nakagami(const NakagamiSpec& spec, StreamRng& rng) {
    if (!(spec.shape >= 0.5)) throw std::invalid_argument("nakagami: shape must be >= 0.5");
    if (spec.blocks < 1) throw std::invalid_argument("nakagami: need >= 1 block");
    GainVector g(spec.blocks);
    for (auto& x : g) x = std::max(rng.next_gamma(spec.shape) / spec.shape, kMinGain);
    return g;
}

/// CDF of the per-block power gain: the regularized lower incomplete gamma
/// at (m, m xi).
inline double nakagami_cdf(double shape, double xi) {
    if (!(shape >= 0.5)) throw std::invalid_argument("nakagami_cdf: shape must be >= 0.5");
    if (xi <= 0.0) return 0.0;
    return boost::math::gamma_p(shape, shape * xi);
}

/// Nakagami shape approximating Rician fading with factor K.
inline double m_from_rician_k(double k) {
    if (k < 0.0) throw std::invalid_argument("m_from_rician_k: K must be >= 0");
    return (k + 1.0) * (k + 1.0) / (2.0 * k + 1.0);
}

struct PdpTap {
    int delay;        // in sample periods
    double power_db;  // before normalization
};

/// OFDM subcarrier gains derived from a power delay profile: complex
/// Gaussian taps with the (normalized) profile powers, transformed to the
/// subcarrier domain. Tap powers are normalized to sum to one so each
/// subcarrier gain has unit mean.
struct OfdmSpec {
    int subcarriers = 64;
    std::vector<PdpTap> taps;

    std::vector<double> normalized_tap_power() const {
        if (taps.empty()) throw std::invalid_argument("ofdm: empty power delay profile");
        if (subcarriers < static_cast<int>(taps.size()))
            throw std::invalid_argument("ofdm: need at least as many subcarriers as taps");
        std::vector<double> p(taps.size());
        double total = 0.0;
        for (std::size_t i = 0; i < taps.size(); ++i) {
            p[i] = std::pow(10.0, taps[i].power_db / 10.0);
            if (!std::isfinite(p[i])) throw std::invalid_argument("ofdm: non-finite tap power");
            total += p[i];
        }
        for (auto& x : p) x /= total;
        return p;
    }

    /// 9-tap symbol-period-sampled indoor NLOS profile (ETSI BRAN model A),
    /// normalized at load.
    static OfdmSpec bran_a(int subcarriers = 64) {
        OfdmSpec s;
        s.subcarriers = subcarriers;
        s.taps = {{1, -3.4630}, {2, -4.6006}, {3, -8.9151},  {4, -12.8223}, {5, -19.9222},
                  {6, -21.1202}, {7, -25.4329}, {8, -29.7891}, {9, -34.1993}};
        return s;
    }

    /// Plain-text rows "delay_index, power_dB"; '#' starts a comment.
    static OfdmSpec from_csv(const std::filesystem::path& file, int subcarriers = 64) {
        std::ifstream is(file);
        if (!is) throw std::runtime_error("cannot open PDP file: " + file.string());
        OfdmSpec s;
        s.subcarriers = subcarriers;
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            for (auto& ch : line)
                if (ch == ',') ch = ' ';
            std::istringstream ls(line);
            int delay;
            double power_db;
            if (ls >> delay >> power_db) {
                s.taps.push_back({delay, power_db});
            } else if (!line.empty() && line.find_first_not_of(" \t\r") != std::string::npos) {
                throw std::runtime_error("bad PDP row at " + file.string() + ":" +
                                         std::to_string(lineno));
            }
        }
        if (s.taps.empty()) throw std::runtime_error("no taps in PDP file: " + file.string());
        return s;
    }
};

/// Prepared OFDM gain sampler; per-sample cost is one complex MAC per
/// (subcarrier, tap) over precomputed twiddles.
class OfdmSampler {
public:
    explicit OfdmSampler(const OfdmSpec& spec)
        : blocks_(spec.subcarriers), taps_(static_cast<int>(spec.taps.size())) {
        const auto p = spec.normalized_tap_power();
        sigma_.resize(taps_);
        for (int l = 0; l < taps_; ++l) sigma_[l] = std::sqrt(p[l]);
        wre_.resize(static_cast<std::size_t>(blocks_) * taps_);
        wim_.resize(wre_.size());
        for (int k = 0; k < blocks_; ++k) {
            for (int l = 0; l < taps_; ++l) {
                const double ang = -2.0 * std::numbers::pi * k * spec.taps[l].delay / blocks_;
                wre_[static_cast<std::size_t>(k) * taps_ + l] = sigma_[l] * std::cos(ang);
                wim_[static_cast<std::size_t>(k) * taps_ + l] = sigma_[l] * std::sin(ang);
            }
        }
        power_ = p;
    }

    int blocks() const { return blocks_; }

    void sample(StreamRng& rng, GainVector& out) const {
        out.resize(blocks_);
        double a[64], b[64];
        const double half = std::sqrt(0.5);
        for (int l = 0; l < taps_; ++l) {
            a[l] = half * rng.next_normal();
            b[l] = half * rng.next_normal();
        }
        for (int k = 0; k < blocks_; ++k) {
            const double* wr = &wre_[static_cast<std::size_t>(k) * taps_];
            const double* wi = &wim_[static_cast<std::size_t>(k) * taps_];
            double re = 0.0, im = 0.0;
            for (int l = 0; l < taps_; ++l) {
                re += a[l] * wr[l] - b[l] * wi[l];
                im += a[l] * wi[l] + b[l] * wr[l];
            }
            out[k] = std::max(re * re + im * im, kMinGain);
        }
    }

    GainVector operator()(StreamRng& rng) const {
        GainVector g;
        sample(rng, g);
        return g;
    }

    /// Analytic correlation of subcarrier gains at the given spacing.
    double gain_correlation(int lag) const {
        double re = 0.0, im = 0.0;
        for (int l = 0; l < taps_; ++l) {
            const double ang = -2.0 * std::numbers::pi * lag * (l + 1) / blocks_;
            re += power_[l] * std::cos(ang);
            im += power_[l] * std::sin(ang);
        }
        return re * re + im * im;
    }

private:
    int blocks_;
    int taps_;
    std::vector<double> sigma_, power_, wre_, wim_;
};

inline GainVector sample_ofdm(const OfdmSpec& spec, StreamRng& rng) {
    if (spec.taps.size() > 64) throw std::invalid_argument("ofdm: at most 64 taps supported");
    return OfdmSampler(spec)(rng);
}

/// Fading model selector used by the simulators and the scenario runner.
struct FadingSpec {
    enum class Kind { nakagami, ofdm };
    Kind kind = Kind::nakagami;
    NakagamiSpec nakagami{};
    OfdmSpec ofdm{};

    int blocks() const {
        return kind == Kind::nakagami ? nakagami.blocks : ofdm.subcarriers;
    }

    static FadingSpec make_nakagami(double shape, int blocks) {
        FadingSpec f;
        f.kind = Kind::nakagami;
        f.nakagami = {shape, blocks};
        return f;
    }
    static FadingSpec make_ofdm(OfdmSpec spec) {
        FadingSpec f;
        f.kind = Kind::ofdm;
        f.ofdm = std::move(spec);
        return f;
    }
};

/// Draws the gain vector for a given sample index from its own counter
/// stream: identical output for any partitioning of the index range.
class FadingSampler {
public:
    FadingSampler(const FadingSpec& spec, std::uint64_t seed) : spec_(spec), seed_(seed) {
        if (spec.kind == FadingSpec::Kind::ofdm) ofdm_.emplace(spec.ofdm);
        else if (!(spec.nakagami.shape >= 0.5) || spec.nakagami.blocks < 1)
            throw std::invalid_argument("bad nakagami spec");
    }

    int blocks() const { return spec_.blocks(); }

    void sample(std::uint64_t index, GainVector& out) const {
        StreamRng rng(seed_, index);
        if (ofdm_) {
            ofdm_->sample(rng, out);
        } else {
            out.resize(spec_.nakagami.blocks);
            for (auto& x : out)
                x = std::max(rng.next_gamma(spec_.nakagami.shape) / spec_.nakagami.shape, kMinGain);
        }
    }

private:
    FadingSpec spec_;
    std::uint64_t seed_;
    std::optional<OfdmSampler> ofdm_;
};

}  // namespace bfpa
