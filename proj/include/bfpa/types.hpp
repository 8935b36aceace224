#pragma once

#include <stdexcept>
#include <vector>

namespace bfpa {

/// Per-block power fading gains (linear scale).
using GainVector = std::vector<double>;

/// Per-block transmit powers (linear SNR units).
using PowerVector = std::vector<double>;

inline double mean(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("mean of empty vector");
    double s = 0.0;
    for (const double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace bfpa
