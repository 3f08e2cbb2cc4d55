#include "ppcr/special.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace ppcr::special {

namespace {

using cplx = std::complex<double>;

constexpr int kWeidemanTerms = 36;

struct WeidemanTable {
    double scale;
    std::array<double, kWeidemanTerms> coeff;  // coeff[q] multiplies Z^q
};

WeidemanTable build_weideman_table() {
    constexpr int n = kWeidemanTerms;
    constexpr int m = 2 * n;
    constexpr int m2 = 2 * m;
    WeidemanTable table{};
    table.scale = std::sqrt(n / std::numbers::sqrt2);
    const double l = table.scale;

    // Samples f(t_k) for k = -m+1 .. m-1, prefixed by a zero, then fftshift-ed.
    std::array<double, m2> samples{};
    samples[0] = 0.0;
    for (int k = -m + 1; k <= m - 1; ++k) {
        const double t = l * std::tan(0.5 * k * std::numbers::pi / m);
        samples[static_cast<std::size_t>(k + m)] = std::exp(-t * t) * (l * l + t * t);
    }
    std::array<double, m2> shifted{};
    for (int j = 0; j < m2; ++j) shifted[static_cast<std::size_t>(j)] = samples[static_cast<std::size_t>((j + m) % m2)];

    // Real part of the DFT at frequencies 1..n.
    for (int q = 1; q <= n; ++q) {
        double acc = 0.0;
        for (int j = 0; j < m2; ++j) {
            acc += shifted[static_cast<std::size_t>(j)] * std::cos(2.0 * std::numbers::pi * j * q / m2);
        }
        table.coeff[static_cast<std::size_t>(q - 1)] = acc / m2;
    }
    return table;
}

const WeidemanTable& weideman_table() {
    static const WeidemanTable table = build_weideman_table();
    return table;
}

cplx faddeeva_weideman(cplx z) {
    const auto& table = weideman_table();
    const cplx i(0.0, 1.0);
    const cplx denom = table.scale - i * z;
    const cplx big_z = (table.scale + i * z) / denom;
    cplx p = 0.0;
    for (int q = kWeidemanTerms - 1; q >= 0; --q) p = p * big_z + table.coeff[static_cast<std::size_t>(q)];
    return 2.0 * p / (denom * denom) + (1.0 / std::sqrt(std::numbers::pi)) / denom;
}

cplx faddeeva_continued_fraction(cplx z) {
    // w(z) = (i / sqrt(pi)) / (z - (1/2)/(z - 1/(z - (3/2)/(z - ...))))
    constexpr int depth = 60;
    cplx tail = z;
    for (int k = depth; k >= 1; --k) tail = z - (0.5 * k) / tail;
    return cplx(0.0, 1.0 / std::sqrt(std::numbers::pi)) / tail;
}

double log_sum_exp(double a, double b) {
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace

std::complex<double> faddeeva(std::complex<double> z) {
    if (std::abs(z) > 8.0) return faddeeva_continued_fraction(z);
    return faddeeva_weideman(z);
}

double erfcx(double x) {
    if (x >= 0.0) return faddeeva(cplx(0.0, x)).real();
    if (x < -26.0) return std::numeric_limits<double>::infinity();
    return 2.0 * std::exp(x * x) - faddeeva(cplx(0.0, -x)).real();
}

double inv_erfcx(double x) {
    if (x >= 0.0) return 1.0 / faddeeva(cplx(0.0, x)).real();
    return std::exp(-x * x) / std::erfc(x);
}

LogDensity gauss_laplace_log_density(double x, double sigma, double b) {
    const double root2sigma = std::numbers::sqrt2 * sigma;
    const double u1 = (sigma * sigma / b - x) / root2sigma;
    const double u2 = (sigma * sigma / b + x) / root2sigma;
    const double gauss_exponent = -x * x / (2.0 * sigma * sigma);
    const double shift = sigma * sigma / (2.0 * b * b);

    // term1 = exp(shift - x/b) erfc(u1), term2 = exp(shift + x/b) erfc(u2)
    auto log_term = [&](double u, double signed_x) {
        if (u >= 0.0) return gauss_exponent + std::log(erfcx(u));
        return shift + signed_x / b + std::log(std::erfc(u));
    };
    const double lt1 = log_term(u1, -x);
    const double lt2 = log_term(u2, x);
    const double log_sum = log_sum_exp(lt1, lt2);

    const double kappa = 2.0 / (std::sqrt(std::numbers::pi) * root2sigma);
    const double d1 = -1.0 / b + kappa * inv_erfcx(u1);
    const double d2 = 1.0 / b - kappa * inv_erfcx(u2);
    const double w1 = std::exp(lt1 - log_sum);
    const double w2 = std::exp(lt2 - log_sum);

    return {std::log(1.0 / (4.0 * b)) + log_sum, w1 * d1 + w2 * d2};
}

LogDensity voigt_log_density(double x, double sigma, double gamma) {
    const double root2sigma = std::numbers::sqrt2 * sigma;
    const cplx zeta(x / root2sigma, gamma / root2sigma);
    const cplx w = faddeeva(zeta);
    const cplx dw = -2.0 * zeta * w + cplx(0.0, 2.0 / std::sqrt(std::numbers::pi));
    const double re = w.real();
    return {std::log(re) - std::log(sigma * std::sqrt(2.0 * std::numbers::pi)),
            dw.real() / (root2sigma * re)};
}

}  // namespace ppcr::special
