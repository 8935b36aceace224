#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "test_helpers.hpp"

using namespace bfpa;

namespace {

/// Kolmogorov-Smirnov statistic of sorted samples against a cdf.
template <typename Cdf>
double ks_stat(std::vector<double> xs, Cdf&& cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        worst = std::max(worst, std::abs(f - (i + 1) / n));
        worst = std::max(worst, std::abs(f - i / n));
    }
    return worst;
}

}  // namespace

TEST_CASE("rayleigh power gains are exponential") {
    const NakagamiSpec spec{1.0, 1};
    std::vector<double> xs;
    xs.reserve(1'000'000);
    StreamRng rng(11, 0);
    for (int i = 0; i < 1'000'000; ++i) xs.push_back(sample_nakagami(spec, rng)[0]);
    CHECK(ks_stat(std::move(xs), [](double x) { return -std::expm1(-x); }) < 0.002);
}

TEST_CASE("nakagami gains have unit mean and variance 1/m") {
    for (const double m : {0.5, 1.0, 2.0}) {
        const NakagamiSpec spec{m, 4};
        StreamRng rng(3, static_cast<std::uint64_t>(10 * m));
        double s1 = 0, s2 = 0;
        const int n = 250000;  // times 4 blocks
        for (int i = 0; i < n; ++i) {
            for (const double g : sample_nakagami(spec, rng)) {
                s1 += g;
                s2 += g * g;
            }
        }
        const double mean = s1 / (4.0 * n);
        const double var = s2 / (4.0 * n) - mean * mean;
        CHECK(mean == Catch::Approx(1.0).margin(0.005));
        CHECK(var == Catch::Approx(1.0 / m).margin(0.01 * std::max(1.0, 1.0 / m)));
    }
}

TEST_CASE("sampler matches the analytic cdf") {
    const NakagamiSpec spec{2.0, 1};
    std::vector<double> xs;
    xs.reserve(1'000'000);
    StreamRng rng(17, 2);
    for (int i = 0; i < 1'000'000; ++i) xs.push_back(sample_nakagami(spec, rng)[0]);
    CHECK(ks_stat(std::move(xs), [](double x) { return nakagami_cdf(2.0, x); }) < 0.002);
}

TEST_CASE("analytic cdf basics and a quadrature cross-check") {
    CHECK(nakagami_cdf(1.0, std::log(2.0)) == Catch::Approx(0.5).margin(1e-12));
    CHECK(nakagami_cdf(3.0, 0.0) == 0.0);
    CHECK(nakagami_cdf(3.0, -1.0) == 0.0);
    // integrate the m = 1/2 density by substitution gamma = t^2 (removes
    // the 1/sqrt singularity), Simpson on a fine grid
    const double m = 0.5;
    const auto integrand = [m](double t) {
        const double g = t * t;
        return 2.0 * t * std::pow(m, m) * std::pow(g, m - 1.0) * std::exp(-m * g) /
               std::tgamma(m);
    };
    const int n = 4000;
    const double h = 1.0 / n;  // xi = 1 -> t in [0, 1]
    double s = integrand(0.0) + integrand(1.0);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * integrand(i * h);
    const double byquad = s * h / 3.0;
    CHECK(nakagami_cdf(0.5, 1.0) == Catch::Approx(byquad).margin(1e-8));
}

TEST_CASE("rician shape mapping") {
    CHECK(m_from_rician_k(0.0) == Catch::Approx(1.0));
    CHECK(m_from_rician_k(1.0) == Catch::Approx(4.0 / 3.0));
    double prev = 0.9;
    for (double k = 0.0; k < 50.0; k += 0.5) {
        const double m = m_from_rician_k(k);
        CHECK(m > prev - 1e-12);
        prev = m;
    }
    CHECK_THROWS_AS(m_from_rician_k(-0.1), std::invalid_argument);
}

TEST_CASE("identical seed and stream give bit-identical gain vectors") {
    const FadingSpec spec = FadingSpec::make_nakagami(0.7, 4);
    const FadingSampler a(spec, 404), b(spec, 404);
    GainVector ga, gb;
    for (const std::uint64_t idx : {0ull, 1ull, 12345ull, 9999999ull}) {
        a.sample(idx, ga);
        b.sample(idx, gb);
        CHECK(ga == gb);
    }
}

TEST_CASE("pdp normalization and file loading") {
    const auto spec = OfdmSpec::bran_a();
    const auto p = spec.normalized_tap_power();
    double total = 0;
    for (const double x : p) total += x;
    CHECK(total == Catch::Approx(1.0).margin(1e-12));

    const auto from_file =
        OfdmSpec::from_csv(std::filesystem::path(BFPA_SOURCE_DIR) / "data/bran_a.csv");
    REQUIRE(from_file.taps.size() == spec.taps.size());
    for (std::size_t i = 0; i < spec.taps.size(); ++i) {
        CHECK(from_file.taps[i].delay == spec.taps[i].delay);
        CHECK(from_file.taps[i].power_db == Catch::Approx(spec.taps[i].power_db));
    }
}

TEST_CASE("ofdm subcarrier gains: unit-mean exponential marginals") {
    const OfdmSampler sampler(OfdmSpec::bran_a());
    std::vector<double> first;
    first.reserve(300000);
    double s1 = 0;
    GainVector g;
    const int n = 300000;
    for (int i = 0; i < n; ++i) {
        StreamRng rng(21, static_cast<std::uint64_t>(i));
        sampler.sample(rng, g);
        first.push_back(g[17]);
        s1 += g[17];
    }
    CHECK(s1 / n == Catch::Approx(1.0).margin(0.01));
    CHECK(ks_stat(std::move(first), [](double x) { return -std::expm1(-x); }) < 0.0035);
}

TEST_CASE("ofdm gain correlation decays with subcarrier spacing") {
    const OfdmSampler sampler(OfdmSpec::bran_a());
    const int n = 200000;
    GainVector g;
    double m0 = 0, m1 = 0, m4 = 0, m16 = 0, v0 = 0, c1 = 0, c4 = 0, c16 = 0;
    for (int i = 0; i < n; ++i) {
        StreamRng rng(22, static_cast<std::uint64_t>(i));
        sampler.sample(rng, g);
        m0 += g[0];
        m1 += g[1];
        m4 += g[4];
        m16 += g[16];
        v0 += g[0] * g[0];
        c1 += g[0] * g[1];
        c4 += g[0] * g[4];
        c16 += g[0] * g[16];
    }
    const double mu0 = m0 / n;
    const double var = v0 / n - mu0 * mu0;
    const auto corr = [&](double cross, double mu) { return (cross / n - mu0 * mu) / var; };
    const double r1 = corr(c1, m1 / n), r4 = corr(c4, m4 / n), r16 = corr(c16, m16 / n);
    CHECK(r1 > 0.5);
    CHECK(r1 > r4);
    CHECK(r4 > r16);
    CHECK(r1 == Catch::Approx(sampler.gain_correlation(1)).margin(0.02));
    CHECK(r4 == Catch::Approx(sampler.gain_correlation(4)).margin(0.02));
    CHECK(r16 == Catch::Approx(sampler.gain_correlation(16)).margin(0.02));
}
