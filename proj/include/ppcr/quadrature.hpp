#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>

namespace ppcr {

/// Adaptive 61-point Gauss-Kronrod integration. Infinite bounds are allowed;
/// the nodes never touch the endpoints, so integrands with singular but
/// integrable endpoint behaviour are safe.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-12, unsigned max_depth = 25) {
    using boost::math::quadrature::gauss_kronrod;
    if (std::isfinite(a) && std::isfinite(b)) {
        // Boost's error estimate on a narrow [a, b] is inflated by ~1/(b - a)
        // and then never meets rel_tol; integrate on [-1, 1] instead.
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        auto g = [&](double u) { return half * f(mid + half * u); };
        return gauss_kronrod<double, 61>::integrate(g, -1.0, 1.0, max_depth, rel_tol);
    }
    return gauss_kronrod<double, 61>::integrate(f, a, b, max_depth, rel_tol);
}

template <class F>
double integrate_real_line(F&& f, double rel_tol = 1e-12) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return integrate(f, -inf, inf, rel_tol);
}

}  // namespace ppcr
