#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bfpa/outage.hpp"

namespace bfpa {

inline constexpr const char* kVersion = "bfpa 1.0.0";

/// Config file problem, carrying the offending line for diagnostics.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// One batch experiment: a constellation/decoder, a fading model, a rate
/// list, a scheme list and the Monte Carlo controls.
struct Scenario {
    std::string constellation = "qpsk";  // or "gaussian"
    Decoder decoder = Decoder::cm;
    FadingSpec fading = FadingSpec::make_nakagami(1.0, 4);
    std::vector<double> rates;
    std::vector<SchemeSpec> schemes;
    std::vector<double> snr_db;
    std::uint64_t samples = 100000;
    std::uint64_t calib_samples = 100000;
    std::uint64_t seed = 1;
    std::filesystem::path output_dir;
    std::optional<double> gain_target;
    std::optional<std::pair<double, double>> slope_window;
    std::filesystem::path pdp_file;  // when fading is ofdm and taps came from a file
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& v, int line) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("expected a number, got '" + v + "'", line);
    }
}

inline std::uint64_t parse_u64(const std::string& v, int line) {
    const double d = parse_double(v, line);
    if (d < 0 || d != std::floor(d) || d > 9e18)
        throw ConfigError("expected a nonnegative integer, got '" + v + "'", line);
    return static_cast<std::uint64_t>(d);
}

inline bool parse_bool(const std::string& v, int line) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("expected a boolean, got '" + v + "'", line);
}

/// "a, b, c" or "lo:step:hi".
inline std::vector<double> parse_list(const std::string& v, int line) {
    std::vector<double> out;
    if (v.find(':') != std::string::npos) {
        double lo, step, hi;
        char c1, c2;
        std::istringstream is(v);
        if (!(is >> lo >> c1 >> step >> c2 >> hi) || c1 != ':' || c2 != ':' || step <= 0)
            throw ConfigError("expected lo:step:hi, got '" + v + "'", line);
        for (double x = lo; x <= hi + 1e-9 * step; x += step) out.push_back(x);
        return out;
    }
    std::string item;
    std::istringstream is(v);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_double(item, line));
    }
    if (out.empty()) throw ConfigError("empty list", line);
    return out;
}

inline SchemeSpec::Kind scheme_kind_from_name(const std::string& name, int line) {
    if (name == "uniform") return SchemeSpec::Kind::uniform;
    if (name == "optimal") return SchemeSpec::Kind::optimal;
    if (name == "twf") return SchemeSpec::Kind::twf;
    if (name == "ref") return SchemeSpec::Kind::ref;
    if (name == "wf-gaussian") return SchemeSpec::Kind::wf_gaussian;
    if (name == "lt-optimal") return SchemeSpec::Kind::lt_optimal;
    if (name == "lt-twf") return SchemeSpec::Kind::lt_twf;
    if (name == "lt-ref") return SchemeSpec::Kind::lt_ref;
    throw ConfigError("unknown scheme kind '" + name + "'", line);
}

inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

/// Shortest round-trip decimal form, locale independent.
inline std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

/// Parses the flat `[section]` / `key = value` scenario format. Unknown
/// keys are errors.
inline Scenario parse_scenario(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw ConfigError("cannot open config: " + file.string());
    Scenario sc;
    sc.output_dir = file.stem();

    enum class Section { none, scenario, scheme } section = Section::none;
    std::string fading_kind = "nakagami";
    double nakagami_m = 1.0;
    int blocks = 4;
    std::string pdp;
    bool have_rates = false, have_snr = false;

    struct PendingScheme {
        SchemeSpec spec;
        int line;
        bool has_cap = false;
    };
    std::vector<PendingScheme> schemes;

    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("unterminated section header", lineno);
            const std::string name = detail::trim(line.substr(1, line.size() - 2));
            if (name == "scenario") section = Section::scenario;
            else if (name == "scheme") {
                section = Section::scheme;
                schemes.push_back({SchemeSpec{}, lineno});
            } else throw ConfigError("unknown section '" + name + "'", lineno);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value", lineno);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (val.empty()) throw ConfigError("empty value for '" + key + "'", lineno);

        if (section == Section::scenario) {
            if (key == "constellation") sc.constellation = val;
            else if (key == "decoder") {
                if (val == "cm") sc.decoder = Decoder::cm;
                else if (val == "bicm") sc.decoder = Decoder::bicm;
                else throw ConfigError("decoder must be cm or bicm", lineno);
            } else if (key == "fading") {
                if (val != "nakagami" && val != "ofdm")
                    throw ConfigError("fading must be nakagami or ofdm", lineno);
                fading_kind = val;
            } else if (key == "m") nakagami_m = detail::parse_double(val, lineno);
            else if (key == "blocks") blocks = static_cast<int>(detail::parse_u64(val, lineno));
            else if (key == "pdp") pdp = val;
            else if (key == "rates") {
                sc.rates = detail::parse_list(val, lineno);
                have_rates = true;
            } else if (key == "snr_db") {
                sc.snr_db = detail::parse_list(val, lineno);
                have_snr = true;
            } else if (key == "samples") sc.samples = detail::parse_u64(val, lineno);
            else if (key == "calibration_samples") sc.calib_samples = detail::parse_u64(val, lineno);
            else if (key == "seed") sc.seed = detail::parse_u64(val, lineno);
            else if (key == "output") sc.output_dir = val;
            else if (key == "gain_target") sc.gain_target = detail::parse_double(val, lineno);
            else if (key == "slope_window") {
                const auto w = detail::parse_list(val, lineno);
                if (w.size() != 2) throw ConfigError("slope_window needs two values", lineno);
                sc.slope_window = {w[0], w[1]};
            } else throw ConfigError("unknown scenario key '" + key + "'", lineno);
        } else if (section == Section::scheme) {
            auto& s = schemes.back();
            if (key == "kind") s.spec.kind = detail::scheme_kind_from_name(val, lineno);
            else if (key == "beta") {
                s.spec.cap_snr = detail::parse_double(val, lineno);
                s.has_cap = true;
            } else if (key == "beta_db") {
                s.spec.cap_snr = std::pow(10.0, detail::parse_double(val, lineno) / 10.0);
                s.has_cap = true;
            } else if (key == "approx") s.spec.use_approx = detail::parse_bool(val, lineno);
            else throw ConfigError("unknown scheme key '" + key + "'", lineno);
        } else {
            throw ConfigError("key outside any section", lineno);
        }
    }

    if (!have_rates) throw ConfigError("missing 'rates' in [scenario]");
    if (!have_snr) throw ConfigError("missing 'snr_db' in [scenario]");
    if (schemes.empty()) throw ConfigError("no [scheme] sections");
    for (std::size_t i = 1; i < sc.snr_db.size(); ++i)
        if (!(sc.snr_db[i] > sc.snr_db[i - 1])) throw ConfigError("snr_db must be ascending");
    for (auto& s : schemes) {
        if (s.spec.needs_cap() && !s.has_cap)
            throw ConfigError("scheme needs beta or beta_db", s.line);
        sc.schemes.push_back(s.spec);
    }
    if (fading_kind == "nakagami") {
        sc.fading = FadingSpec::make_nakagami(nakagami_m, blocks);
    } else {
        if (pdp.empty()) throw ConfigError("ofdm fading needs a pdp file");
        sc.pdp_file = file.parent_path() / pdp;
        sc.fading = FadingSpec::make_ofdm(OfdmSpec::from_csv(sc.pdp_file, blocks));
    }
    if (sc.constellation == "gaussian" && sc.decoder == Decoder::bicm)
        throw ConfigError("gaussian input has no bicm decoder");
    return sc;
}

/// Writes one outage curve in the stable CSV layout; slope fit (when one
/// is computable) is appended as comment rows.
inline void write_curve_csv(const std::filesystem::path& file, const OutageCurve& curve,
                            std::optional<std::pair<double, double>> slope_window,
                            const std::string& infeasible_reason = {}) {
    std::ofstream os(file, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + file.string());
    os << "scheme,P_dB,outage,ci,N\n";
    if (!infeasible_reason.empty()) {
        os << "# infeasible: " << infeasible_reason << "\n";
        return;
    }
    for (const auto& pt : curve.points) {
        os << curve.scheme_label << ',' << detail::format_double(pt.power_db) << ','
           << detail::format_double(pt.outage) << ',' << detail::format_double(pt.ci95) << ','
           << std::to_string(pt.samples) << "\n";
    }
    double lo = curve.points.front().power_db, hi = curve.points.back().power_db;
    if (slope_window) {
        lo = slope_window->first;
        hi = slope_window->second;
    }
    try {
        const SlopeFit fit = fit_exponent(curve, lo, hi);
        os << "# slope: d_hat=" << detail::format_double(fit.exponent)
           << " window_db=[" << detail::format_double(lo) << ',' << detail::format_double(hi)
           << "] residual_rms=" << detail::format_double(fit.residual_rms)
           << " points=" << fit.points_used << "\n";
    } catch (const std::exception& e) {
        os << "# slope: n/a (" << e.what() << ")\n";
    }
    if (curve.lt.valid) {
        os << "# lt: zero_outage_power=" << detail::format_double(curve.lt.zero_outage_power)
           << " tail_mass_0.1pct=" << detail::format_double(curve.lt.tail_mass) << "\n";
    }
}

inline std::string curve_file_name(const SchemeSpec& scheme, double rate) {
    std::string label = scheme.label();
    for (auto& c : label)
        if (!std::isalnum(static_cast<unsigned char>(c))) c = '-';
    while (label.find("--") != std::string::npos)
        label.erase(label.find("--"), 1);
    if (!label.empty() && label.back() == '-') label.pop_back();
    return label + "_R" + detail::format_double(rate) + ".csv";
}

/// Runs every (scheme, rate) cell of the scenario, writing one CSV per
/// curve plus a summary and a manifest. Infeasible cells produce sentinel
/// CSVs and do not abort the campaign. Returns the number of curves that
/// failed for unexpected reasons (0 means clean).
inline int run_scenario(const Scenario& sc, const std::filesystem::path& config_file,
                        int workers = 1, std::ostream* log = nullptr) {
    namespace fs = std::filesystem;
    fs::create_directories(sc.output_dir);

    MiProfile profile;
    if (sc.constellation == "gaussian") {
        profile = MiProfile::gaussian_input();
    } else {
        const Constellation c = make_constellation(sc.constellation);
        profile = MiProfile::get_cached(c, sc.decoder, MiProfile::default_cache_dir(), {}, 32,
                                        workers);
    }

    McOptions opt;
    opt.samples = sc.samples;
    opt.seed = sc.seed;
    opt.workers = workers;
    opt.calib_samples = sc.calib_samples;

    std::ofstream summary(sc.output_dir / "summary.txt", std::ios::binary | std::ios::trunc);
    summary << "# " << kVersion << " campaign summary\n";

    int failures = 0;
    std::vector<std::pair<double, OutageCurve>> done;  // rate, curve
    for (const double rate : sc.rates) {
        for (const auto& scheme : sc.schemes) {
            const auto out_file = sc.output_dir / curve_file_name(scheme, rate);
            if (log) *log << "running " << scheme.label() << " R=" << rate << "\n";
            try {
                OutageCurve curve = estimate_outage(scheme, sc.fading, profile, rate, sc.snr_db, opt);
                write_curve_csv(out_file, curve, sc.slope_window);
                summary << curve.scheme_label << " R=" << detail::format_double(rate) << ":";
                try {
                    double lo = sc.snr_db.front(), hi = sc.snr_db.back();
                    if (sc.slope_window) {
                        lo = sc.slope_window->first;
                        hi = sc.slope_window->second;
                    }
                    const SlopeFit fit = fit_exponent(curve, lo, hi);
                    summary << " slope=" << detail::format_double(fit.exponent);
                } catch (const std::exception&) {
                    summary << " slope=n/a";
                }
                if (curve.lt.valid) {
                    summary << " P_th~" << detail::format_double(curve.lt.zero_outage_power)
                            << " (tail_mass=" << detail::format_double(curve.lt.tail_mass) << ")";
                    summary << " s=[";
                    for (std::size_t j = 0; j < curve.lt.thresholds.size(); ++j)
                        summary << (j ? " " : "") << detail::format_double(curve.lt.thresholds[j]);
                    summary << "]";
                }
                summary << "\n";
                done.emplace_back(rate, std::move(curve));
            } catch (const InfeasibleRate& e) {
                write_curve_csv(out_file, OutageCurve{scheme.label(), rate, {}}, std::nullopt,
                                e.what());
                summary << scheme.label() << " R=" << detail::format_double(rate)
                        << ": infeasible (" << e.what() << ")\n";
            } catch (const std::exception& e) {
                ++failures;
                summary << scheme.label() << " R=" << detail::format_double(rate) << ": FAILED ("
                        << e.what() << ")\n";
                if (log) *log << "curve failed: " << e.what() << "\n";
            }
        }
    }

    if (sc.gain_target) {
        summary << "# gains vs '" << sc.schemes.front().label() << "' at outage "
                << detail::format_double(*sc.gain_target) << "\n";
        for (const double rate : sc.rates) {
            const OutageCurve* base = nullptr;
            for (const auto& [r, c] : done)
                if (r == rate && c.scheme_label == sc.schemes.front().label()) base = &c;
            if (!base) continue;
            for (const auto& [r, c] : done) {
                if (r != rate || &c == base) continue;
                try {
                    summary << "gain " << c.scheme_label << " over " << base->scheme_label
                            << " R=" << detail::format_double(rate) << ": "
                            << detail::format_double(gain_at(*base, c, *sc.gain_target))
                            << " dB\n";
                } catch (const std::exception& e) {
                    summary << "gain " << c.scheme_label << " R=" << detail::format_double(rate)
                            << ": n/a (" << e.what() << ")\n";
                }
            }
        }
    }

    // manifest: inputs that determine the outputs, bit for bit
    std::ofstream manifest(sc.output_dir / "manifest.txt", std::ios::binary | std::ios::trunc);
    manifest << "version: " << kVersion << "\n";
    manifest << "config: " << config_file.filename().string() << "\n";
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a64(detail::read_file(config_file))));
    manifest << "config_hash: " << hex << "\n";
    if (!sc.pdp_file.empty()) {
        std::snprintf(hex, sizeof hex, "%016llx",
                      static_cast<unsigned long long>(detail::fnv1a64(detail::read_file(sc.pdp_file))));
        manifest << "pdp_hash: " << hex << "\n";
    }
    manifest << "seed: " << sc.seed << "\n";
    manifest << "samples: " << sc.samples << "\n";
    manifest << "calibration_samples: " << sc.calib_samples << "\n";
    for (const auto& s : sc.schemes) manifest << "scheme: " << s.label() << "\n";
    return failures;
}

/// MI/MMSE table export with the analytic bounds alongside, for plotting
/// and eyeballing; parameter sets echoed as comment rows.
inline void dump_tables(const MiProfile& profile, double cap_snr, std::ostream& os) {
    std::optional<RefParams> rp;
    std::optional<ApproxParams> ap;
    if (!profile.is_gaussian_input()) {
        try {
            rp = ref_params_for(profile.constellation_name(), profile.decoder());
            ap = approx_params_for(profile.constellation_name(), profile.decoder());
        } catch (const std::invalid_argument&) {
            // constellations without published parameter sets
        }
    }
    os << "# profile: " << profile.constellation_name() << " "
       << decoder_name(profile.decoder()) << "\n";
    os << "# beta=" << detail::format_double(cap_snr) << "\n";
    if (rp)
        os << "# ref_params: rho0=" << detail::format_double(rp->tangent_snr)
           << " kappa=" << detail::format_double(rp->slope)
           << " a=" << detail::format_double(rp->intercept)
           << " alpha=" << detail::format_double(rp->knee_snr) << "\n";
    if (ap)
        os << "# approx_params: c1=" << detail::format_double(ap->c1)
           << " c2=" << detail::format_double(ap->c2) << " c3=" << detail::format_double(ap->c3)
           << " delta_r=" << detail::format_double(ap->delta_r) << "\n";
    os << "rho_dB,I,MMSE,I_tw,I_ref,I_approx\n";
    const auto& snr = profile.snr_table();
    const auto& mi = profile.mi_table();
    const auto& mmse = profile.mmse_table();
    const int m = profile.bits_per_symbol();
    if (profile.is_gaussian_input()) {
        for (double db = -30.0; db <= 40.0 + 1e-9; db += 0.05) {
            const double rho = std::pow(10.0, db / 10.0);
            os << detail::format_double(db) << ',' << detail::format_double(profile.mi(rho)) << ','
               << detail::format_double(profile.mmse(rho)) << ','
               << detail::format_double(tw_bound(rho, cap_snr)) << ",nan,nan\n";
        }
        return;
    }
    for (std::size_t i = 1; i < snr.size(); ++i) {
        const double db = profile.grid().db_at(static_cast<int>(i) - 1);
        os << detail::format_double(db) << ',' << detail::format_double(mi[i]) << ','
           << detail::format_double(mmse[i]) << ','
           << detail::format_double(tw_bound(snr[i], cap_snr)) << ',';
        if (rp && cap_snr >= rp->knee_snr)
            os << detail::format_double(ref_bound(snr[i], *rp, cap_snr));
        else os << "nan";
        os << ',';
        if (ap) os << detail::format_double(mi_approx(snr[i], *ap, m));
        else os << "nan";
        os << "\n";
    }
}

}  // namespace bfpa
