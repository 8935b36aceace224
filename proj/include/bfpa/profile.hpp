#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bfpa/constellation.hpp"
#include "bfpa/infotheory.hpp"
#include "bfpa/parallel.hpp"
#include "bfpa/pchip.hpp"

namespace bfpa {

/// Tabulation grid in dB; the zero-SNR endpoint is always prepended with
/// its exact values I(0) = 0 and MMSE(0) = 1.
struct ProfileGrid {
    double lo_db = -30.0;
    double hi_db = 40.0;
    double step_db = 0.05;

    int points() const {
        return static_cast<int>(std::llround((hi_db - lo_db) / step_db)) + 1;
    }
    double db_at(int i) const { return lo_db + step_db * i; }
};

/// Tabulated, invertible mutual-information / MMSE curves for one
/// (constellation, decoder) pair, plus the closed-form Gaussian-input
/// reference. Monotone piecewise-cubic interpolation preserves the shape
/// invariants; inversions run on dedicated inverse-direction interpolants.
///
/// Beyond the last reliably tabulated MMSE value (quadrature noise floor)
/// the inverse extends by a log-linear tail in SNR, matching the
/// exponential decay of constellation-constrained MMSE. Mutual information
/// saturates to its final grid value above the grid.
class MiProfile {
public:
    MiProfile() = default;

    static MiProfile build(const Constellation& c, Decoder dec, ProfileGrid grid = {},
                           int quad_order = 32, int workers = 0) {
        MiProfile p;
        p.name_ = c.name;
        p.decoder_ = dec;
        p.bits_ = c.bits_per_symbol;
        p.grid_ = grid;
        p.quad_order_ = quad_order;
        const int n = grid.points();
        p.snr_.assign(n + 1, 0.0);
        p.mi_.assign(n + 1, 0.0);
        p.mmse_.assign(n + 1, 0.0);
        p.mi_[0] = 0.0;
        p.mmse_[0] = 1.0;
        for (int i = 0; i < n; ++i) p.snr_[i + 1] = std::pow(10.0, grid.db_at(i) / 10.0);

        const GaussHermite rule(quad_order);
        if (dec == Decoder::cm) {
            parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t i) {
                p.mi_[i + 1] = mi_cm(c, p.snr_[i + 1], rule);
                p.mmse_[i + 1] = mmse_cm(c, p.snr_[i + 1], rule);
            });
        } else {
            parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t i) {
                p.mi_[i + 1] = mi_bicm(c, p.snr_[i + 1], rule);
            });
            p.derive_mmse_from_mi();
        }
        p.finalize();
        return p;
    }

    /// Closed-form Gaussian-input curves I = log2(1+rho), MMSE = 1/(1+rho).
    static MiProfile gaussian_input() {
        MiProfile p;
        p.name_ = "gaussian";
        p.decoder_ = Decoder::cm;
        p.bits_ = 0;
        p.gaussian_ = true;
        return p;
    }

    // -- identity ----------------------------------------------------------

    const std::string& constellation_name() const { return name_; }
    Decoder decoder() const { return decoder_; }
    bool is_gaussian_input() const { return gaussian_; }
    int bits_per_symbol() const { return bits_; }
    const ProfileGrid& grid() const { return grid_; }
    int quad_order() const { return quad_order_; }

    /// Largest achievable rate: M for discrete inputs, unbounded for the
    /// Gaussian-input reference.
    double max_rate() const {
        return gaussian_ ? std::numeric_limits<double>::infinity() : static_cast<double>(bits_);
    }

    // raw tables (index 0 is the exact zero-SNR endpoint)
    const std::vector<double>& snr_table() const { return snr_; }
    const std::vector<double>& mi_table() const { return mi_; }
    const std::vector<double>& mmse_table() const { return mmse_; }

    // -- point queries ------------------------------------------------------

    double mi(double snr) const {
        if (gaussian_) return std::log2(1.0 + check_snr(snr));
        check_snr(snr);
        if (snr <= 0.0) return 0.0;
        if (snr <= snr_[1]) return mi_[1] * snr / snr_[1];
        if (snr >= snr_.back()) return mi_.back();
        return mi_of_db_(10.0 * std::log10(snr));
    }

    double mmse(double snr) const {
        if (gaussian_) return 1.0 / (1.0 + check_snr(snr));
        check_snr(snr);
        if (snr <= 0.0) return 1.0;
        if (snr <= snr_[1]) return 1.0 + (mmse_[1] - 1.0) * snr / snr_[1];
        if (snr >= snr_mmse_reliable_max_)
            return std::exp(ln_mmse_reliable_min_ - tail_slope_ * (snr - snr_mmse_reliable_max_));
        return std::exp(lnmmse_of_db_(10.0 * std::log10(snr)));
    }

    /// SNR at which the mutual information equals `bits`. Throws when the
    /// value is beyond the invertible tabulated range.
    double inv_mi(double bits) const {
        if (gaussian_) {
            if (bits < 0.0) throw std::domain_error("inv_mi: rate must be >= 0");
            return std::exp2(bits) - 1.0;
        }
        if (bits < 0.0) throw std::domain_error("inv_mi: rate must be >= 0");
        if (bits == 0.0) return 0.0;
        if (bits <= mi_[1]) return snr_[1] * bits / mi_[1];
        if (bits > mi_invertible_max_)
            throw std::domain_error("inv_mi: rate " + std::to_string(bits) +
                                    " is beyond the invertible range of profile " + name_);
        return std::pow(10.0, db_of_mi_(bits) / 10.0);
    }

    double mi_invertible_max() const {
        return gaussian_ ? std::numeric_limits<double>::infinity() : mi_invertible_max_;
    }

    /// Upper end of the strictly-decreasing, quadrature-reliable MMSE range.
    double snr_mmse_invertible_max() const {
        return gaussian_ ? std::numeric_limits<double>::infinity() : snr_mmse_reliable_max_;
    }

    /// SNR at which the MMSE equals v, for v in (0, 1]; v = 1 maps to 0.
    double inv_mmse(double v) const {
        if (!(v > 0.0) || v > 1.0)
            throw std::domain_error("inv_mmse: value must be in (0, 1]");
        if (v == 1.0) return 0.0;
        return inv_mmse_ln(std::log(v));
    }

    /// Log-domain inverse MMSE: accepts ln(v) directly so callers can work
    /// with water levels far below the double underflow limit.
    double inv_mmse_ln(double ln_v) const {
        if (ln_v >= 0.0) return 0.0;
        if (gaussian_) {
            if (ln_v < -690.0) throw std::domain_error("inv_mmse: level underflows Gaussian curve");
            return std::expm1(-ln_v);
        }
        if (ln_v >= ln_mmse_low_) {
            // near-zero-SNR regime, MMSE ~ 1 - c snr
            const double v = std::exp(ln_v);
            return snr_[1] * (1.0 - v) / (1.0 - mmse_[1]);
        }
        if (ln_v >= ln_mmse_reliable_min_) return inv_mmse_fast_(ln_v);
        return snr_mmse_reliable_max_ + (ln_mmse_reliable_min_ - ln_v) / tail_slope_;
    }

    // -- cache --------------------------------------------------------------

    void save(const std::filesystem::path& file) const;
    static std::optional<MiProfile> load(const std::filesystem::path& file);

    static std::filesystem::path cache_file_name(const std::string& constellation, Decoder dec,
                                                 const ProfileGrid& grid, int quad_order) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s_%s_%g_%g_%g_q%d.mip", constellation.c_str(),
                      decoder_name(dec).c_str(), grid.lo_db, grid.hi_db, grid.step_db, quad_order);
        return {buf};
    }

    static std::filesystem::path default_cache_dir() {
        if (const char* env = std::getenv("BFPA_CACHE_DIR")) return {env};
        return {"profile-cache"};
    }

    /// Load from the cache directory, or build and store on a miss. Any
    /// unreadable or mismatching cache entry is rebuilt.
    static MiProfile get_cached(const Constellation& c, Decoder dec,
                                const std::filesystem::path& dir = default_cache_dir(),
                                ProfileGrid grid = {}, int quad_order = 32, int workers = 0) {
        const auto file = dir / cache_file_name(c.name, dec, grid, quad_order);
        if (auto p = load(file)) {
            if (p->name_ == c.name && p->decoder_ == dec && p->quad_order_ == quad_order &&
                p->grid_.points() == grid.points())
                return std::move(*p);
        }
        MiProfile p = build(c, dec, grid, quad_order, workers);
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (!ec) {
            try {
                p.save(file);
            } catch (const std::exception&) {
                // cache is an optimization only
            }
        }
        return p;
    }

private:
    std::string name_;
    Decoder decoder_ = Decoder::cm;
    int bits_ = 0;
    bool gaussian_ = false;
    ProfileGrid grid_{};
    int quad_order_ = 32;

    std::vector<double> snr_, mi_, mmse_;

    Pchip mi_of_db_;        // uniform dB axis
    Pchip lnmmse_of_db_;    // uniform dB axis, reliable region only
    Pchip db_of_mi_;        // inverse direction, strictly increasing prefix
    Pchip inv_mmse_fast_;   // uniform ln(mmse) axis -> snr
    double mi_invertible_max_ = 0.0;
    double ln_mmse_low_ = 0.0;        // ln(mmse) at the first grid point
    double ln_mmse_reliable_min_ = 0.0;
    double snr_mmse_reliable_max_ = 0.0;
    double tail_slope_ = 1.0;         // d(-ln mmse)/d snr at the reliable end

    static double check_snr(double snr) {
        if (snr < 0.0 || std::isnan(snr)) throw std::domain_error("snr must be >= 0");
        return snr;
    }

    void derive_mmse_from_mi() {
        // the BICM "MMSE" is defined as ln2 * dI/drho; centered differences
        // on the tabulated curve, one-sided at the ends
        const std::size_t n = snr_.size();
        mmse_[0] = kLn2 * (mi_[1] - mi_[0]) / (snr_[1] - snr_[0]);
        for (std::size_t i = 1; i + 1 < n; ++i)
            mmse_[i] = kLn2 * (mi_[i + 1] - mi_[i - 1]) / (snr_[i + 1] - snr_[i - 1]);
        mmse_[n - 1] = kLn2 * (mi_[n - 1] - mi_[n - 2]) / (snr_[n - 1] - snr_[n - 2]);
    }

    void finalize() {
        const std::size_t n = snr_.size();
        const double m = static_cast<double>(bits_);
        for (std::size_t i = 1; i < n; ++i) {
            mi_[i] = std::min(std::max(mi_[i], mi_[i - 1]), m);
            mmse_[i] = std::max(std::min(mmse_[i], mmse_[i - 1]), 0.0);
        }

        // forward interpolants on the uniform dB grid (excludes the rho=0 row)
        std::vector<double> db(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) db[i] = grid_.db_at(static_cast<int>(i));
        mi_of_db_ = Pchip(db, {mi_.begin() + 1, mi_.end()});

        // strictly increasing MI prefix for the inverse map
        std::vector<double> xi{0.0}, yi{db.front() - 60.0};  // pad origin far below grid
        xi.reserve(n);
        yi.reserve(n);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (mi_[i] > xi.back() + 1e-13) {
                xi.push_back(mi_[i]);
                yi.push_back(db[i - 1]);
            } else if (mi_[i + 1] <= mi_[i]) {
                break;
            }
        }
        if (xi.size() < 4) throw std::runtime_error("profile: MI table is not invertible");
        mi_invertible_max_ = xi.back();
        db_of_mi_ = Pchip(std::move(xi), std::move(yi));

        // reliable MMSE region: strictly decreasing and above the
        // quadrature noise floor (relative error of the 32-node rule grows
        // quickly below ~1e-7)
        constexpr double kFloor = 1e-8;
        std::size_t last = 1;
        while (last + 1 < n && mmse_[last + 1] < mmse_[last] && mmse_[last + 1] > kFloor) ++last;
        if (last < 8) throw std::runtime_error("profile: MMSE table is not invertible");
        ln_mmse_low_ = std::log(mmse_[1]);
        ln_mmse_reliable_min_ = std::log(mmse_[last]);
        snr_mmse_reliable_max_ = snr_[last];

        // local exponential-decay slope across the last couple of decades
        std::size_t ref = last;
        while (ref > 1 && std::log(mmse_[ref]) < ln_mmse_reliable_min_ + 4.0) --ref;
        tail_slope_ = (std::log(mmse_[ref]) - ln_mmse_reliable_min_) /
                      (snr_[last] - snr_[ref]);
        if (!(tail_slope_ > 0.0)) tail_slope_ = 1.0;

        std::vector<double> lnm(last), dbm(last);
        for (std::size_t i = 1; i <= last; ++i) {
            lnm[i - 1] = std::log(mmse_[i]);
            dbm[i - 1] = db[i - 1];
        }
        lnmmse_of_db_ = Pchip({dbm.begin(), dbm.end()}, {lnm.begin(), lnm.end()});

        // exact inverse on the non-uniform ln(mmse) axis, then resampled to
        // a uniform axis for O(1) lookups on the allocator hot path
        std::vector<double> xr(lnm.rbegin(), lnm.rend());
        std::vector<double> yr(dbm.rbegin(), dbm.rend());
        Pchip db_of_lnmmse(std::move(xr), std::move(yr));
        const int resample = 2048;
        std::vector<double> ux(resample), uy(resample);
        const double ulo = ln_mmse_reliable_min_;
        const double uhi = ln_mmse_low_;
        for (int i = 0; i < resample; ++i) {
            const double u = ulo + (uhi - ulo) * i / (resample - 1);
            ux[i] = u;
            uy[i] = std::pow(10.0, db_of_lnmmse(u) / 10.0);
        }
        inv_mmse_fast_ = Pchip(std::move(ux), std::move(uy));
    }

    // -- serialization helpers ----------------------------------------------

    static void put_u64(std::ostream& os, std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        os.write(reinterpret_cast<const char*>(b), 8);
    }
    static void put_f64(std::ostream& os, double d) {
        std::uint64_t v;
        std::memcpy(&v, &d, 8);
        put_u64(os, v);
    }
    static bool get_u64(std::istream& is, std::uint64_t& v) {
        unsigned char b[8];
        if (!is.read(reinterpret_cast<char*>(b), 8)) return false;
        v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return true;
    }
    static bool get_f64(std::istream& is, double& d) {
        std::uint64_t v;
        if (!get_u64(is, v)) return false;
        std::memcpy(&d, &v, 8);
        return true;
    }
};

inline void MiProfile::save(const std::filesystem::path& file) const {
    if (gaussian_) throw std::logic_error("gaussian pseudo-profile is not cacheable");
    const auto tmp = file.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write profile cache: " + tmp);
        os.write("BFPAMIP1", 8);
        put_u64(os, name_.size());
        os.write(name_.data(), static_cast<std::streamsize>(name_.size()));
        put_u64(os, decoder_ == Decoder::cm ? 0 : 1);
        put_u64(os, static_cast<std::uint64_t>(bits_));
        put_f64(os, grid_.lo_db);
        put_f64(os, grid_.hi_db);
        put_f64(os, grid_.step_db);
        put_u64(os, static_cast<std::uint64_t>(quad_order_));
        put_u64(os, snr_.size());
        for (std::size_t i = 0; i < snr_.size(); ++i) {
            put_f64(os, snr_[i]);
            put_f64(os, mi_[i]);
            put_f64(os, mmse_[i]);
        }
        if (!os) throw std::runtime_error("short write on profile cache: " + tmp);
    }
    std::filesystem::rename(tmp, file);
}

inline std::optional<MiProfile> MiProfile::load(const std::filesystem::path& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) return std::nullopt;
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, "BFPAMIP1", 8) != 0) return std::nullopt;
    std::uint64_t name_len = 0;
    if (!get_u64(is, name_len) || name_len > 64) return std::nullopt;
    std::string name(name_len, '\0');
    if (!is.read(name.data(), static_cast<std::streamsize>(name_len))) return std::nullopt;
    std::uint64_t dec = 0, bits = 0, order = 0, count = 0;
    MiProfile p;
    if (!get_u64(is, dec) || dec > 1) return std::nullopt;
    if (!get_u64(is, bits)) return std::nullopt;
    if (!get_f64(is, p.grid_.lo_db) || !get_f64(is, p.grid_.hi_db) || !get_f64(is, p.grid_.step_db))
        return std::nullopt;
    if (!get_u64(is, order) || !get_u64(is, count)) return std::nullopt;
    if (count < 16 || count > (1u << 24)) return std::nullopt;
    p.name_ = name;
    p.decoder_ = dec == 0 ? Decoder::cm : Decoder::bicm;
    p.bits_ = static_cast<int>(bits);
    p.quad_order_ = static_cast<int>(order);
    p.snr_.resize(count);
    p.mi_.resize(count);
    p.mmse_.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        if (!get_f64(is, p.snr_[i]) || !get_f64(is, p.mi_[i]) || !get_f64(is, p.mmse_[i]))
            return std::nullopt;
    }
    if (static_cast<std::uint64_t>(p.grid_.points()) + 1 != count) return std::nullopt;
    if (p.snr_[0] != 0.0 || p.mi_[0] != 0.0) return std::nullopt;
    if (p.decoder_ == Decoder::cm ? (p.mmse_[0] != 1.0) : !(p.mmse_[0] > 0.0 && p.mmse_[0] < 1.5))
        return std::nullopt;
    try {
        p.finalize();
    } catch (const std::exception&) {
        return std::nullopt;
    }
    return p;
}

/// Max deviation of the centered-difference MI slope from the tabulated
/// MMSE, in the ln2 * dI/drho = MMSE convention. Diagnostic for the
/// tabulation consistency of a CM profile.
inline double max_gsv_deviation(const MiProfile& p) {
    const auto& snr = p.snr_table();
    const auto& mi = p.mi_table();
    const auto& mmse = p.mmse_table();
    double worst = 0.0;
    for (std::size_t i = 2; i + 1 < snr.size(); ++i) {
        const double slope = (mi[i + 1] - mi[i - 1]) / (snr[i + 1] - snr[i - 1]);
        worst = std::max(worst, std::abs(kLn2 * slope - mmse[i]));
    }
    return worst;
}

/// Smallest cap SNR for which the truncated-water-filling diversity bound
/// matches the Singleton bound at rate R. Rates sitting on a bound
/// discontinuity are flagged: no finite cap achieves it there.
struct BetaR {
    double value;
    bool at_discontinuity;
};

inline BetaR beta_r(const MiProfile& p, int blocks, double rate) {
    const double m = p.max_rate();
    if (!(rate > 0.0) || rate >= m) throw std::domain_error("beta_r: need 0 < R < M");
    const double t = blocks * (1.0 - rate / m);
    const double rounded = std::round(t);
    if (std::abs(t - rounded) < 1e-9 && rounded >= 0.0)
        return {std::numeric_limits<double>::infinity(), true};
    const double target = blocks * rate / (blocks - std::floor(t));
    return {p.inv_mi(target), false};
}

}  // namespace bfpa
