#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace bfpa {

/// Complex signal set with per-point binary labels, normalized so that
/// sum |x|^2 = 2^M (unit average symbol energy).
struct Constellation {
    std::vector<std::complex<double>> points;
    std::vector<std::uint32_t> labels;  // labels[i] is the M-bit label of points[i]
    int bits_per_symbol = 0;
    std::string name;

    int size() const { return static_cast<int>(points.size()); }

    /// Bit value at labeling position j in 1..M; j = 1 is the most
    /// significant label bit.
    int bit_at(int point_index, int j) const {
        return (labels[point_index] >> (bits_per_symbol - j)) & 1u;
    }
};

/// Index sets X[j][q]: points whose label carries bit q at position j.
struct BitPartition {
    // sets[j-1][q] for j in 1..M, q in {0,1}
    std::vector<std::vector<std::vector<int>>> sets;
};

inline std::uint32_t gray_code(std::uint32_t k) { return k ^ (k >> 1); }

/// 2^M equally spaced unit-circle points, Gray labels in angular order.
/// M = 1 is BPSK on the real axis; QPSK points sit at odd multiples of 45
/// degrees so that it coincides with a rotated 4-QAM.
inline Constellation make_psk(int bits_per_symbol) {
    if (bits_per_symbol < 1 || bits_per_symbol > 3)
        throw std::invalid_argument("make_psk: supported sizes are M in {1,2,3}");
    const int n = 1 << bits_per_symbol;
    Constellation c;
    c.bits_per_symbol = bits_per_symbol;
    c.name = (n == 2) ? "bpsk" : (n == 4 ? "qpsk" : "8psk");
    c.points.resize(n);
    c.labels.resize(n);
    const double offset = (n == 4) ? std::numbers::pi / 4.0 : 0.0;
    for (int k = 0; k < n; ++k) {
        const double ang = offset + 2.0 * std::numbers::pi * k / n;
        c.points[k] = {std::cos(ang), std::sin(ang)};
        c.labels[k] = gray_code(static_cast<std::uint32_t>(k));
    }
    if (n == 2) {
        c.points[0] = {1.0, 0.0};
        c.points[1] = {-1.0, 0.0};
    }
    return c;
}

/// Square QAM grid with independent reflected-Gray labeling per axis,
/// scaled to unit average energy. The first M/2 label bits select the
/// in-phase level, the remaining bits the quadrature level.
inline Constellation make_qam(int bits_per_symbol) {
    if (bits_per_symbol < 2 || bits_per_symbol > 6 || bits_per_symbol % 2 != 0)
        throw std::invalid_argument("make_qam: supported sizes are even M in {2,4,6}");
    const int half = bits_per_symbol / 2;
    const int side = 1 << half;
    const int n = side * side;
    Constellation c;
    c.bits_per_symbol = bits_per_symbol;
    c.name = std::to_string(n) + "qam";
    c.points.resize(n);
    c.labels.resize(n);
    double energy = 0.0;
    for (int li = 0; li < side; ++li) {
        for (int lq = 0; lq < side; ++lq) {
            const int idx = li * side + lq;
            const double re = 2.0 * li - (side - 1);
            const double im = 2.0 * lq - (side - 1);
            c.points[idx] = {re, im};
            c.labels[idx] = (gray_code(li) << half) | gray_code(lq);
            energy += re * re + im * im;
        }
    }
    const double scale = std::sqrt(static_cast<double>(n) / energy);
    for (auto& p : c.points) p *= scale;
    return c;
}

inline Constellation make_constellation(const std::string& name) {
    if (name == "bpsk") return make_psk(1);
    if (name == "qpsk") return make_psk(2);
    if (name == "8psk") return make_psk(3);
    if (name == "4qam") return make_qam(2);
    if (name == "16qam") return make_qam(4);
    if (name == "64qam") return make_qam(6);
    throw std::invalid_argument("unknown constellation: " + name);
}

inline BitPartition bit_partition(const Constellation& c) {
    const int m = c.bits_per_symbol;
    BitPartition part;
    part.sets.assign(m, {std::vector<int>{}, std::vector<int>{}});
    for (int j = 1; j <= m; ++j)
        for (int i = 0; i < c.size(); ++i)
            part.sets[j - 1][c.bit_at(i, j)].push_back(i);
    return part;
}

}  // namespace bfpa
