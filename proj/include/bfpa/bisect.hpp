#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace bfpa {

struct BisectResult {
    double x;        // abscissa of the accepted bracket side
    double f;        // function value there
    int iterations;
};

/// Bisection for f nondecreasing on [lo, hi] with f(lo) <= target <= f(hi).
/// Stops when |f - target| <= tol_f or the bracket collapses; `prefer_high`
/// selects which bracket side is returned on exit.
template <typename F>
BisectResult bisect_increasing(F&& f, double lo, double hi, double target,
                               double tol_f, int max_iter = 300,
                               bool prefer_high = false) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo > target || fhi < target)
        throw std::runtime_error("bisect: target not bracketed");
    int it = 0;
    for (; it < max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // bracket exhausted in doubles
        const double fm = f(mid);
        if (std::abs(fm - target) <= tol_f) return {mid, fm, it + 1};
        if (fm < target) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    if (prefer_high) return {hi, fhi, it};
    return {lo, flo, it};
}

}  // namespace bfpa
