#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace bfpa {

/// Gauss-Hermite rule: integral of f(t) exp(-t^2) dt ~= sum w_i f(t_i).
/// Nodes found by Newton iteration on the orthonormal Hermite recurrence,
/// weights are the Christoffel numbers 1 / sum_k p_k(t_i)^2.
class GaussHermite {
public:
    explicit GaussHermite(int n) : node(n), weight(n) {
        // above ~100 the orthonormal recurrence overflows near the
        // extreme nodes
        if (n < 1 || n > 100) throw std::invalid_argument("GaussHermite: order must be in [1, 100]");
        const int half = (n + 1) / 2;
        double z = 0.0;
        for (int i = 0; i < half; ++i) {
            // initial guesses, largest root first
            if (i == 0) {
                z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
            } else if (i == 1) {
                z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
            } else if (i == 2) {
                z = 1.86 * z - 0.86 * node[0];
            } else if (i == 3) {
                z = 1.91 * z - 0.91 * node[1];
            } else {
                z = 2.0 * z - node[i - 2];
            }
            for (int it = 0; it < 100; ++it) {
                const auto [p, dp] = eval(n, z);
                const double dz = p / dp;
                z -= dz;
                if (std::abs(dz) < 1e-15 * (1.0 + std::abs(z))) break;
            }
            node[i] = z;
            node[n - 1 - i] = -z;
            const double w = christoffel(n, z);
            weight[i] = w;
            weight[n - 1 - i] = w;
        }
        if (n % 2 == 1) node[half - 1] = 0.0;
    }

    std::vector<double> node, weight;

private:
    // value and derivative of the orthonormal Hermite polynomial of degree n
    static std::pair<double, double> eval(int n, double x) {
        double pm1 = 0.0;
        double p = std::pow(std::numbers::pi, -0.25);
        for (int k = 1; k <= n; ++k) {
            const double pk = x * std::sqrt(2.0 / k) * p - std::sqrt((k - 1.0) / k) * pm1;
            pm1 = p;
            p = pk;
        }
        const double dp = std::sqrt(2.0 * n) * pm1;
        return {p, dp};
    }

    static double christoffel(int n, double x) {
        double pm1 = 0.0;
        double p = std::pow(std::numbers::pi, -0.25);
        double s = p * p;
        for (int k = 1; k < n; ++k) {
            const double pk = x * std::sqrt(2.0 / k) * p - std::sqrt((k - 1.0) / k) * pm1;
            pm1 = p;
            p = pk;
            s += p * p;
        }
        return 1.0 / s;
    }
};

/// Shared default rule used by the mutual-information integrals.
inline const GaussHermite& default_quadrature() {
    static const GaussHermite rule(32);
    return rule;
}

}  // namespace bfpa
