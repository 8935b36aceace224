#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bfpa {

/// Shape-preserving piecewise-cubic interpolant (Fritsch-Carlson slopes).
/// Monotone data produces a monotone interpolant; evaluation clamps
/// outside the abscissa range. Uniformly spaced abscissae are located in
/// O(1), everything else by binary search.
class Pchip {
public:
    Pchip() = default;

    Pchip(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) throw std::invalid_argument("Pchip: need >= 2 points, equal sizes");
        for (std::size_t i = 1; i < n; ++i)
            if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("Pchip: abscissae must be strictly increasing");
        compute_slopes();
        detect_uniform();
    }

    double x_front() const { return x_.front(); }
    double x_back() const { return x_.back(); }
    double y_front() const { return y_.front(); }
    double y_back() const { return y_.back(); }

    double operator()(double xq) const {
        if (xq <= x_.front()) return y_.front();
        if (xq >= x_.back()) return y_.back();
        const std::size_t k = locate(xq);
        const double h = x_[k + 1] - x_[k];
        const double t = (xq - x_[k]) / h;
        const double t2 = t * t;
        const double t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1;
        const double h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2;
        const double h11 = t3 - t2;
        return h00 * y_[k] + h10 * h * m_[k] + h01 * y_[k + 1] + h11 * h * m_[k + 1];
    }

    double derivative(double xq) const {
        if (xq <= x_.front()) return m_.front();
        if (xq >= x_.back()) return m_.back();
        const std::size_t k = locate(xq);
        const double h = x_[k + 1] - x_[k];
        const double t = (xq - x_[k]) / h;
        const double t2 = t * t;
        const double dh00 = (6 * t2 - 6 * t) / h;
        const double dh10 = 3 * t2 - 4 * t + 1;
        const double dh01 = (-6 * t2 + 6 * t) / h;
        const double dh11 = 3 * t2 - 2 * t;
        return dh00 * y_[k] + dh10 * m_[k] + dh01 * y_[k + 1] + dh11 * m_[k + 1];
    }

private:
    std::vector<double> x_, y_, m_;
    bool uniform_ = false;
    double step_ = 0;

    void detect_uniform() {
        const std::size_t n = x_.size();
        step_ = (x_.back() - x_.front()) / static_cast<double>(n - 1);
        uniform_ = true;
        for (std::size_t i = 1; i < n; ++i) {
            const double expect = x_.front() + step_ * static_cast<double>(i);
            if (std::abs(x_[i] - expect) > 1e-9 * std::max(1.0, std::abs(expect))) {
                uniform_ = false;
                break;
            }
        }
    }

    std::size_t locate(double xq) const {
        if (uniform_) {
            auto k = static_cast<std::size_t>((xq - x_.front()) / step_);
            if (k >= x_.size() - 1) k = x_.size() - 2;
            // guard against rounding at cell boundaries
            if (xq < x_[k]) --k;
            else if (xq > x_[k + 1]) ++k;
            return k;
        }
        const auto it = std::upper_bound(x_.begin(), x_.end(), xq);
        return static_cast<std::size_t>(it - x_.begin()) - 1;
    }

    void compute_slopes() {
        const std::size_t n = x_.size();
        std::vector<double> h(n - 1), d(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = x_[i + 1] - x_[i];
            d[i] = (y_[i + 1] - y_[i]) / h[i];
        }
        m_.assign(n, 0.0);
        if (n == 2) {
            m_[0] = m_[1] = d[0];
            return;
        }
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (d[i - 1] == 0.0 || d[i] == 0.0 || (d[i - 1] > 0) != (d[i] > 0)) {
                m_[i] = 0.0;
            } else {
                const double w1 = 2 * h[i] + h[i - 1];
                const double w2 = h[i] + 2 * h[i - 1];
                m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
            }
        }
        m_[0] = edge_slope(h[0], h[1], d[0], d[1]);
        m_[n - 1] = edge_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    }

    static double edge_slope(double h0, double h1, double d0, double d1) {
        double m = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (m * d0 <= 0.0) m = 0.0;
        else if ((d0 > 0) != (d1 > 0) && std::abs(m) > 3 * std::abs(d0)) m = 3 * d0;
        return m;
    }
};

}  // namespace bfpa
